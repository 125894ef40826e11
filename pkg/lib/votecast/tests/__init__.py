import numpy as np

from votecast import ingest
from votecast import series as ser

START = ser.day_from_iso('2020-01-01')


def linear_inputs(days=120, cadence=10, slope=0.05):
    """
    Interactions and polls where every quantity is linear in time.

    ``alpha`` tweets once a day and collects ``100 + 10 t`` likes; its poll
    share is ``40 + slope * t`` and ``beta``'s is ``45 - slope * t``, both
    sampled every ``cadence`` days.
    """
    t = np.arange(days)
    counts = {
        ('alpha', 'twitter', 'post'): np.ones(days, dtype=np.int64),
        ('alpha', 'twitter', 'like'): 100 + 10 * t,
        ('beta', 'twitter', 'post'): np.ones(days, dtype=np.int64),
        ('beta', 'twitter', 'like'): np.full(days, 50),
    }
    table = ingest.InteractionTable(START, counts)
    poll_days = np.arange(0, days, cadence)
    polls = ingest.PollBook({
        'alpha': ser.SparseObservations(START + poll_days, 40.0 + slope * poll_days),
        'beta': ser.SparseObservations(START + poll_days, 45.0 - slope * poll_days),
    })
    return table, polls
