__all__ = ['bits', 'errors', 'extraction', 'planner', 'privacyamp',
           'reconcile', 'session', 'sim', 'stats', 'transport', 'wire']
