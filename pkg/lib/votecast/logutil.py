"""
Logging setup for the command-line tools.

Library modules only create ``logging.getLogger(__name__)`` loggers; the
handlers are attached here, once, by the program that runs them.
"""
import logging
import sys

__all__ = ['create_logger', 'level_for', 'LoggingExceptionHook']

DEFAULT_FORMAT = '%(levelname)s: %(message)s'
FILE_FORMAT = '%(asctime)s %(name)s %(levelname)s: %(message)s'


def create_logger(name, format=DEFAULT_FORMAT, datefmt=None, stream=None,
                  level=logging.INFO, filename=None, filemode='w',
                  filelevel=None, propagate=True):
    """
    Configure the logger called ``name`` and return it.

    Any handlers already on the logger are replaced, so calling this again
    does not duplicate output.  A `logging.NullHandler` is attached when
    neither ``stream`` nor ``filename`` is given.

    Parameters
    ----------
    name : str
        Logger name.
    format : str
        Format string of the stream handler.
    datefmt : str, optional
        Date/time format of both handlers.
    stream : file-like, optional
        Add a `logging.StreamHandler` writing to ``stream``.
    level : int
        Level of the logger and of the stream handler.
    filename : str, optional
        Add a `logging.FileHandler` writing to ``filename``; its records
        use `FILE_FORMAT`.
    filemode : {'w', 'a'}
    filelevel : int, optional
        Level of the file handler; defaults to ``level``.
    propagate : bool
        Pass records on to the parent logger.

    Returns
    -------
    logger : logging.Logger
    """
    logger = logging.getLogger(name)
    logger.setLevel(level if filelevel is None else min(level, filelevel))
    logger.propagate = propagate

    for hdlr in list(logger.handlers):
        logger.removeHandler(hdlr)
        if isinstance(hdlr, logging.FileHandler):
            hdlr.close()

    if not (filename or stream):
        logger.addHandler(logging.NullHandler())

    if filename:
        hdlr = logging.FileHandler(filename, filemode, encoding='utf-8')
        hdlr.setLevel(level if filelevel is None else filelevel)
        hdlr.setFormatter(logging.Formatter(FILE_FORMAT, datefmt))
        logger.addHandler(hdlr)

    if stream:
        hdlr = logging.StreamHandler(stream)
        hdlr.setLevel(level)
        hdlr.setFormatter(logging.Formatter(format, datefmt))
        logger.addHandler(hdlr)

    return logger


def level_for(verbose=False, quiet=False):
    """
    Logger level for the ``--verbose``/``--quiet`` flags.

    >>> level_for(verbose=True) == logging.DEBUG
    True
    """
    if verbose:
        return logging.DEBUG
    if quiet:
        return logging.WARNING
    return logging.INFO


class LoggingExceptionHook:
    """
    `sys.excepthook` replacement that logs uncaught exceptions to ``logger``
    before handing them to the previous hook.  Deleting the object restores
    the previous hook.
    """

    def __init__(self, logger, level=logging.ERROR):
        self._oldexcepthook = sys.excepthook
        self.logger = logger
        self.level = level
        if not self.logger.handlers:
            self.logger.addHandler(logging.NullHandler())

    def __del__(self):
        try:
            sys.excepthook = self._oldexcepthook
        except AttributeError:
            sys.excepthook = sys.__excepthook__

    def __call__(self, exc_type, exc_value, traceback):
        self.logger.log(self.level, 'An unhandled exception occurred:',
                        exc_info=(exc_type, exc_value, traceback))
        self._oldexcepthook(exc_type, exc_value, traceback)
