import importlib
import torch
import torch.utils.data
from copy import deepcopy
from os import path as osp

from ..utils import get_root_logger, scandir
from ..utils.registry import DATASET_REGISTRY
from .data_util import (AngleDataset, TabularDataset, load_csv, make_blobs, scale_to_angle, split,
                        write_csv)

__all__ = [
    'build_dataset', 'build_dataloader', 'AngleDataset', 'TabularDataset', 'load_csv', 'make_blobs',
    'scale_to_angle', 'split', 'write_csv'
]

# automatically scan and import dataset modules for registry
# scan all the files under the data folder with '_dataset' in file names
data_folder = osp.dirname(osp.abspath(__file__))
dataset_filenames = [osp.splitext(osp.basename(v))[0] for v in scandir(data_folder) if v.endswith('_dataset.py')]
# import all the dataset modules
_dataset_modules = [importlib.import_module(f'qleak.data.{file_name}') for file_name in dataset_filenames]


def build_dataset(dataset_opt, seed=None):
    """Build dataset from options.

    Args:
        dataset_opt (dict): Configuration for dataset. It must contain:
            name (str): Dataset name.
            type (str): Dataset type.
        seed (int | None): Split and generator seed, unless the options set one.
    """
    dataset_opt = deepcopy(dataset_opt)
    if dataset_opt.get('seed') is None:
        dataset_opt['seed'] = seed if seed is not None else 0
    dataset = DATASET_REGISTRY.get(dataset_opt['type'])(dataset_opt)
    logger = get_root_logger()
    table = dataset.table
    logger.info(f'Dataset [{dataset.__class__.__name__}] - {dataset_opt.get("name", table.name)} is built: '
                f'{len(table.train_idx)} train / {len(table.test_idx)} test rows, '
                f'{table.n_features} features, {table.n_classes} classes.')
    return dataset


def build_dataloader(dataset, batch_size, seed):
    """Shuffled mini-batches whose order depends only on `seed` and the epoch count.

    Args:
        dataset (AngleDataset): Training split.
        batch_size (int): Batch size; the last batch may be smaller.
        seed (int): Seed of the shuffling generator.
    """
    generator = torch.Generator().manual_seed(int(seed))
    return torch.utils.data.DataLoader(
        dataset, batch_size=batch_size, shuffle=True, num_workers=0, drop_last=False, generator=generator)
