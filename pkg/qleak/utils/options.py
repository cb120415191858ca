import os
import sys
import time
import yaml
from collections import OrderedDict
from os import path as osp

from .errors import ConfigError

RUNS_ROOT_ENV = 'QLEAK_RUNS_ROOT'


def ordered_yaml():
    """Support OrderedDict for yaml.

    Returns:
        tuple: yaml Loader and Dumper.
    """
    try:
        from yaml import CDumper as Dumper
        from yaml import CLoader as Loader
    except ImportError:
        from yaml import Dumper, Loader

    _mapping_tag = yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG

    def dict_representer(dumper, data):
        return dumper.represent_dict(data.items())

    def dict_constructor(loader, node):
        return OrderedDict(loader.construct_pairs(node))

    Dumper.add_representer(OrderedDict, dict_representer)
    Loader.add_constructor(_mapping_tag, dict_constructor)
    return Loader, Dumper


def yaml_load(f):
    """Load yaml (or json) file or string.

    Args:
        f (str): File path or a python string.

    Returns:
        dict: Loaded dict.
    """
    try:
        if os.path.isfile(f):
            with open(f, 'r', encoding='utf-8') as f:
                return yaml.load(f, Loader=ordered_yaml()[0])
        else:
            return yaml.load(f, Loader=ordered_yaml()[0])
    except yaml.YAMLError as e:
        raise ConfigError(f'Cannot parse option file: {e}') from e


def to_plain(opt):
    """OrderedDict tree to plain dicts and lists, for dumping and json."""
    if isinstance(opt, dict):
        return {k: to_plain(v) for k, v in opt.items()}
    if isinstance(opt, (list, tuple)):
        return [to_plain(v) for v in opt]
    return opt


def dict2str(opt, indent_level=1):
    """dict to string for printing options.

    Args:
        opt (dict): Option dict.
        indent_level (int): Indent level. Default: 1.

    Return:
        (str): Option string for printing.
    """
    msg = '\n'
    for k, v in opt.items():
        if isinstance(v, dict):
            msg += ' ' * (indent_level * 2) + k + ':['
            msg += dict2str(v, indent_level + 1)
            msg += ' ' * (indent_level * 2) + ']\n'
        else:
            msg += ' ' * (indent_level * 2) + k + ': ' + str(v) + '\n'
    return msg


def _postprocess_yml_value(value):
    # None
    if value == '~' or value.lower() == 'none':
        return None
    # bool
    if value.lower() == 'true':
        return True
    elif value.lower() == 'false':
        return False
    # scalars and flow lists
    try:
        return yaml.safe_load(value)
    except yaml.YAMLError:
        return value


def force_update(opt, entry):
    """Apply one `a:b:c=value` override. Creating new keys is not supported."""
    try:
        keys, value = entry.split('=', 1)
    except ValueError as e:
        raise ConfigError(f'Override "{entry}" must look like key:subkey=value') from e
    keys = [k.strip() for k in keys.split(':')]
    node = opt
    for key in keys[:-1]:
        if not isinstance(node, dict) or key not in node:
            raise ConfigError(f'Override "{entry}": unknown option key "{key}"')
        node = node[key]
    if not isinstance(node, dict) or keys[-1] not in node:
        raise ConfigError(f'Override "{entry}": unknown option key "{keys[-1]}"')
    node[keys[-1]] = _postprocess_yml_value(value.strip())


def set_option(opt, keys, value):
    """Set a nested option, creating intermediate sections when missing."""
    node = opt
    for key in keys[:-1]:
        if node.get(key) is None:
            node[key] = OrderedDict()
        node = node[key]
    node[keys[-1]] = value


def parse_options(args):
    """Load the option file named on the command line and apply flag overrides.

    Args:
        args (argparse.Namespace): Parsed command-line arguments. Uses
            `config`, `run_dir`, `seed`, `alpha`, `heuristic`, `view` and
            `force_yml` when present.

    Returns:
        OrderedDict: Options with `path.run_dir` resolved.
    """
    config = getattr(args, 'config', None)
    if config is None and getattr(args, 'run_dir', None) is not None:
        # later stages reuse the options the run was started with
        config = osp.join(args.run_dir, 'config.yml')
    if config is None:
        raise ConfigError('A --config option file (or an existing --run-dir) is required for this command.')
    if not osp.isfile(config):
        raise ConfigError(f'Option file not found: {config}')
    opt = yaml_load(config)
    if not isinstance(opt, dict):
        raise ConfigError(f'Option file {config} must hold a mapping at the top level.')

    if getattr(args, 'seed', None) is not None:
        opt['manual_seed'] = args.seed
    if getattr(args, 'alpha', None) is not None:
        set_option(opt, ['defense', 'alpha'], args.alpha)
    if getattr(args, 'heuristic', None) is not None:
        set_option(opt, ['attack', 'heuristic'], args.heuristic)
    if getattr(args, 'view', None) is not None:
        set_option(opt, ['attack', 'view'], args.view)
    for entry in getattr(args, 'force_yml', None) or []:
        force_update(opt, entry)

    if opt.get('manual_seed') is None:
        raise ConfigError('manual_seed is mandatory: set it in the option file or pass --seed.')
    if 'name' not in opt:
        raise ConfigError('Option file must define a run name.')

    opt.setdefault('path', OrderedDict())
    if opt['path'] is None:
        opt['path'] = OrderedDict()
    run_dir = getattr(args, 'run_dir', None)
    if run_dir is None:
        runs_root = os.environ.get(RUNS_ROOT_ENV, 'experiments')
        run_dir = osp.join(runs_root, opt['name'])
    opt['path']['run_dir'] = osp.abspath(osp.expanduser(run_dir))
    opt['path']['option_file'] = osp.abspath(config)
    return opt


def dump_options(opt, run_dir):
    """Write the effective options to the run directory, with the command on top."""
    cmd = ' '.join(sys.argv)
    filename = osp.join(run_dir, 'config.yml')
    body = yaml.dump(to_plain(opt), Dumper=yaml.SafeDumper, sort_keys=False)
    with open(filename, 'w', encoding='utf-8') as f:
        f.write(f'# GENERATE TIME: {time.asctime()}\n# CMD:\n# {cmd}\n\n')
        f.write(body)
    return filename
