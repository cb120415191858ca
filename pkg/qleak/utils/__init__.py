from .errors import ConfigError, DataError, InvariantError, QleakError
from .logger import AvgTimer, MessageLogger, get_env_info, get_root_logger, init_tb_logger
from .misc import RunLock, get_time_str, read_json, scandir, set_random_seed, write_json
from .options import yaml_load

__all__ = [
    # errors.py
    'QleakError',
    'ConfigError',
    'DataError',
    'InvariantError',
    # logger.py
    'MessageLogger',
    'AvgTimer',
    'init_tb_logger',
    'get_root_logger',
    'get_env_info',
    # misc.py
    'set_random_seed',
    'get_time_str',
    'scandir',
    'read_json',
    'write_json',
    'RunLock',
    # options
    'yaml_load'
]
