from enum import Enum, auto


class RunState(Enum):
    starting = auto()
    started = auto()
    stopping = auto()
    stopped = auto()


class Missingness(Enum):
    mnar = 'MNAR'
    mcar = 'MCAR'


class AttackScheme(Enum):
    none = 'none'
    average = 'average'
    reverse_bandwagon = 'reverse-bandwagon'
    love_hate = 'love-hate'


class TargetMode(Enum):
    simulation = 'simulation'
    empirical = 'empirical'


class Design(Enum):
    recommender = 'recommender'
    survey = 'survey'
    dataset = 'dataset'


class DataFormat(Enum):
    movielens_udata = 'movielens-udata'
    long_csv = 'long-csv'


class Metric(Enum):
    mae = 'mae'
    mps = 'mps'
