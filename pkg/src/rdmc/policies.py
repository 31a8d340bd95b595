from enum import Enum


class StoppingPolicy(Enum):
    #: stop RDMC after at most 10 iterations, Soft-Impute at a relative change of 1e-3
    liberal = 'liberal'
    #: iterate RDMC up to 100 times, Soft-Impute until a relative change of 1e-4
    strict = 'strict'

    @property
    def rdmc_max_iterations(self) -> int:
        return 10 if self is StoppingPolicy.liberal else 100

    @property
    def si_threshold(self) -> float:
        return 1e-3 if self is StoppingPolicy.liberal else 1e-4


class LambdaPolicy(Enum):
    #: run the holdout selection again on the attacked matrix
    reselect = 'reselect'
    #: keep the regularization parameter selected before the attack
    reuse = 'reuse'
