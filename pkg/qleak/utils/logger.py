import datetime
import logging
import time

initialized_logger = {}


class AvgTimer():
    """Wall time of the last epoch, the mean epoch time and the time since creation."""

    def __init__(self):
        self.current_time = 0
        self.total_time = 0
        self.count = 0
        self.avg_time = 0
        self.start_time = self.tic = time.time()

    def start(self):
        self.tic = time.time()

    def record(self):
        self.count += 1
        self.toc = time.time()
        self.current_time = self.toc - self.tic
        self.total_time += self.current_time
        self.avg_time = self.total_time / self.count
        self.tic = time.time()

    def get_current_time(self):
        return self.current_time

    def get_avg_time(self):
        return self.avg_time

    def get_elapsed(self):
        return time.time() - self.start_time


class MessageLogger():
    """Message logger for per-epoch training progress.

    Args:
        opt (dict): Config. It contains the following keys:
            name (str): Exp name.
            logger (dict): Contains 'print_freq' (int) for the epoch interval
                and 'use_tb_logger' (bool).
            train (dict): Contains 'epochs' (int) for total epochs.
        tag (str): Prefix of the run being logged, e.g. 'victim' or 'clone'.
            Default: 'victim'.
        tb_logger (obj:`tb_logger`): Tensorboard logger. Default: None.
    """

    def __init__(self, opt, tag='victim', tb_logger=None):
        self.exp_name = opt['name']
        self.tag = tag
        logger_opt = opt.get('logger', {})
        self.interval = logger_opt.get('print_freq', 1)
        self.max_epochs = opt['train']['epochs']
        self.use_tb_logger = logger_opt.get('use_tb_logger', False)
        self.tb_logger = tb_logger
        self.start_time = time.time()
        self.logger = get_root_logger()

    def __call__(self, log_vars):
        """Format logging message.

        Args:
            log_vars (dict): It contains the following keys:
                epoch (int): Epoch number, starting from 1.
                lrs (list): List for learning rates.

                time (float): Epoch time.
        """
        epoch = log_vars.pop('epoch')
        lrs = log_vars.pop('lrs')

        # tensorboard gets every epoch, the console only every `interval`
        if self.use_tb_logger and self.tb_logger is not None:
            for k, v in log_vars.items():
                if k == 'time' or v is None:
                    continue
                if k.startswith('l_'):
                    self.tb_logger.add_scalar(f'{self.tag}/losses/{k}', v, epoch)
                else:
                    self.tb_logger.add_scalar(f'{self.tag}/{k}', v, epoch)

        if epoch % self.interval != 0 and epoch != self.max_epochs:
            return

        message = f'[{self.exp_name[:5]}..][{self.tag}][epoch:{epoch:3d}/{self.max_epochs}, lr:('
        for v in lrs:
            message += f'{v:.3e},'
        message += ')] '

        # time and estimated time
        if 'time' in log_vars.keys():
            epoch_time = log_vars.pop('time')
            total_time = time.time() - self.start_time
            time_sec_avg = total_time / epoch
            eta_sec = time_sec_avg * (self.max_epochs - epoch)
            eta_str = str(datetime.timedelta(seconds=int(eta_sec)))
            message += f'[eta: {eta_str}, time: {epoch_time:.3f}] '

        # other items, especially losses
        for k, v in log_vars.items():
            if v is None:
                continue
            message += f'{k}: {v:.4e} '
        self.logger.info(message)


def init_tb_logger(log_dir):
    from torch.utils.tensorboard import SummaryWriter
    tb_logger = SummaryWriter(log_dir=log_dir)
    return tb_logger


def get_root_logger(logger_name='qleak', log_level=logging.INFO, log_file=None):
    """Get the root logger.

    The logger will be initialized if it has not been initialized. By default a
    StreamHandler will be added. If `log_file` is specified, a FileHandler will
    also be added, also when the logger was already initialized without one
    (every CLI stage writes its own log file).

    Args:
        logger_name (str): root logger name. Default: 'qleak'.
        log_file (str | None): The log filename. If specified, a FileHandler
            will be added to the root logger.
        log_level (int): The root logger level.

    Returns:
        logging.Logger: The root logger.
    """
    logger = logging.getLogger(logger_name)
    format_str = '%(asctime)s %(levelname)s: %(message)s'
    if logger_name not in initialized_logger:
        stream_handler = logging.StreamHandler()
        stream_handler.setFormatter(logging.Formatter(format_str))
        logger.addHandler(stream_handler)
        logger.propagate = False
        logger.setLevel(log_level)
        initialized_logger[logger_name] = True

    if log_file is not None:
        # drop the file handler of a previous stage
        for handler in list(logger.handlers):
            if isinstance(handler, logging.FileHandler):
                logger.removeHandler(handler)
                handler.close()
        logger.setLevel(log_level)
        file_handler = logging.FileHandler(log_file, 'w')
        file_handler.setFormatter(logging.Formatter(format_str))
        file_handler.setLevel(log_level)
        logger.addHandler(file_handler)
    return logger


def get_env_info():
    """Get environment information.

    Currently, only log the software version.
    """
    import numpy
    import sklearn
    import torch

    from qleak.version import __version__

    msg = r"""
          __           __
  ____ _ / /___  ____ _ / /__
 / __ `// // _ \/ __ `// //_/
/ /_/ // //  __/ /_/ // ,<
\__, //_/ \___/\__,_//_/|_|
  /_/
    """
    msg += ('\nVersion Information: '
            f'\n\tqleak: {__version__}'
            f'\n\tPyTorch: {torch.__version__}'
            f'\n\tNumPy: {numpy.__version__}'
            f'\n\tscikit-learn: {sklearn.__version__}')
    return msg
