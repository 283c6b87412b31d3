"""Storage modules for dclkr."""
from dclkr.storage.memory import RecordStore
from dclkr.storage.analytics import log_records, create_tables

__all__ = ['RecordStore', 'log_records', 'create_tables']
