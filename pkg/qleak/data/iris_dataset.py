from .data_util import AngleDataset, load_iris, prepare_table
from ..utils.registry import DATASET_REGISTRY


@DATASET_REGISTRY.register()
class IrisDataset(AngleDataset):
    """Iris (4 features, 3 classes) from the copy bundled with scikit-learn.

    Args:
        opt (dict): Config for the dataset. It contains the following keys:
        n_train (int): Train rows. Default: 90.
        n_test (int): Test rows. Default: 60.
        seed (int): Split seed.
        phase (str): 'train' or 'test'. Default: 'train'.
    """

    def __init__(self, opt):
        opt = {'n_train': 90, 'n_test': 60, **opt}
        table = prepare_table(load_iris(), opt, int(opt['seed']))
        super(IrisDataset, self).__init__(table, opt.get('phase', 'train'))
        self.opt = opt
