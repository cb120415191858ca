from .data_util import AngleDataset, make_blobs, prepare_table
from ..utils.registry import DATASET_REGISTRY


@DATASET_REGISTRY.register()
class BlobsDataset(AngleDataset):
    """Synthetic Gaussian clusters for quick runs and tests.

    Args:
        opt (dict): Config for the dataset. It contains the following keys:
        n_samples (int): Rows. Default: 100.
        n_features (int): Features, one per qubit. Default: 2.
        n_classes (int): Clusters. Default: 2.
        spread (float): Cluster standard deviation. Default: 1.0.
        n_train (int | None): Train rows. Default: every row.
        n_test (int): Test rows. Default: 0.
        seed (int): Seed of the generator and of the split.
        phase (str): 'train' or 'test'. Default: 'train'.
    """

    def __init__(self, opt):
        seed = int(opt['seed'])
        table = make_blobs(
            int(opt.get('n_samples', 100)), int(opt.get('n_features', 2)), int(opt.get('n_classes', 2)),
            float(opt.get('spread', 1.0)), seed)
        table = prepare_table(table, opt, seed)
        super(BlobsDataset, self).__init__(table, opt.get('phase', 'train'))
        self.opt = opt
