"""Exception types shared by every knapsack_auction module."""


class KnapsackAuctionError(Exception):
    """Base class for errors raised by knapsack_auction."""


class AuctionInputError(KnapsackAuctionError, ValueError):
    """Malformed instance or bid profile (missing/extra bids, bad sizes...)."""


class AuctionDomainError(KnapsackAuctionError, ValueError):
    """An operation was asked for something outside its domain."""


class SimulationIOError(KnapsackAuctionError, OSError):
    """
    Writing simulation artifacts failed.

    Carries the episode index so a run can be resumed from the last checkpoint.
    """

    def __init__(self, message: str, episode: int):
        super().__init__(f"{message} (episode {episode})")
        self.episode = episode
