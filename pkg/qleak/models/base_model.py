import os
import yaml
from collections import OrderedDict

from ..utils import DataError, get_root_logger
from ..utils.options import to_plain

CHECKPOINT_FORMAT_VERSION = 1


class BaseModel():
    """Base model."""

    def __init__(self, opt):
        self.opt = opt
        self.log_dict = OrderedDict()

    def get_current_log(self):
        return self.log_dict

    def save_checkpoint(self, payload, save_path):
        """Write a checkpoint document.

        Args:
            payload (dict): Checkpoint body; `format_version` is added here.
            save_path (str): Target path, usually ending in `.yml`.
        """
        doc = OrderedDict(format_version=CHECKPOINT_FORMAT_VERSION)
        doc.update(payload)
        tmp_path = save_path + '.tmp'
        with open(tmp_path, 'w', encoding='utf-8') as f:
            yaml.dump(to_plain(doc), f, Dumper=yaml.SafeDumper, sort_keys=False, default_flow_style=None)
        os.replace(tmp_path, save_path)
        get_root_logger().info(f'Checkpoint saved to {save_path}')

    def load_checkpoint(self, load_path):
        """Read a checkpoint document written by `save_checkpoint`."""
        if not os.path.isfile(load_path):
            raise DataError(f'Checkpoint not found: {load_path}')
        with open(load_path, 'r', encoding='utf-8') as f:
            try:
                doc = yaml.safe_load(f)
            except yaml.YAMLError as e:
                raise DataError(f'Corrupt checkpoint {load_path}: {e}') from e
        version = doc.get('format_version') if isinstance(doc, dict) else None
        if version != CHECKPOINT_FORMAT_VERSION:
            raise DataError(f'Checkpoint {load_path} has format_version {version}, '
                            f'expected {CHECKPOINT_FORMAT_VERSION}')
        get_root_logger().info(f'Loading checkpoint from {load_path}')
        return doc
