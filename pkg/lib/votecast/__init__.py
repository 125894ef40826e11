"""
votecast: vote-share forecasting from social-media interaction counts and
opinion polls, with walk-forward model comparison and round-two transfer
scenarios.
"""
try:
    from .version import version as __version__
except ImportError:
    __version__ = ''
