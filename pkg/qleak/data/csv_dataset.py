from .data_util import AngleDataset, load_csv, prepare_table
from ..utils.registry import DATASET_REGISTRY


@DATASET_REGISTRY.register()
class CsvDataset(AngleDataset):
    """Pre-reduced features from a CSV file with a header row.

    Args:
        opt (dict): Config for the dataset. It contains the following keys:
        dataroot (str): Path of the CSV file.
        label_column (str): Name of the label column. Default: 'label'.
        n_train (int | None): Train rows. Default: every row.
        n_test (int): Test rows. Default: 0.
        seed (int): Split seed.
        phase (str): 'train' or 'test'. Default: 'train'.
    """

    def __init__(self, opt):
        table = load_csv(opt['dataroot'], opt.get('label_column', 'label'), name=opt.get('name'))
        table = prepare_table(table, opt, int(opt['seed']))
        super(CsvDataset, self).__init__(table, opt.get('phase', 'train'))
        self.opt = opt
