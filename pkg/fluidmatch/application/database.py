import threading
from functools import wraps

from sqlalchemy import Column, Float, Integer, String, create_engine
from sqlalchemy.orm import declarative_base, scoped_session, sessionmaker

Base = declarative_base()


class SweepRow(Base):
    __tablename__ = 'sweep_rows'
    id = Column(Integer, primary_key=True)
    experiment = Column(String, index=True)
    cell = Column(Integer, index=True)
    replication = Column(Integer)
    n = Column(Integer)
    l = Column(Float)
    delta = Column(Float)
    review_length = Column(Float)
    policy = Column(String)
    distribution = Column(String)
    mu = Column(String)
    seed = Column(Integer)
    horizon = Column(Float)
    objective = Column(Float)
    bound = Column(Float)
    ratio = Column(Float)
    reneging_fraction_demand = Column(Float)
    reneging_fraction_supply = Column(Float)
    average_queue_demand = Column(Float)
    average_queue_supply = Column(Float)
    fluid_queue_demand = Column(Float)
    fluid_queue_supply = Column(Float)
    rate_gap = Column(Float)
    matches_total = Column(Integer)
    status = Column(String)


_local = threading.local()


def init_sqlite(path: str):
    """
    Binds the module session to a SQLite file (':memory:' for an in-process store).
    """
    engine = create_engine('sqlite:///' + path)
    Base.metadata.create_all(engine)
    _local.session = scoped_session(sessionmaker(autocommit=False, autoflush=False, bind=engine))
    _local.counter = 0
    return _local.session


def atomic(fun):
    @wraps(fun)
    def decorator(*args, **kwargs):
        try:
            try:
                _local.counter += 1
            except AttributeError:
                _local.counter = 1
            r = fun(*args, **kwargs)
            if _local.counter == 1:
                _local.session.commit()
            _local.counter -= 1
            return r
        except Exception as e:
            if _local.counter == 1:
                _local.session.rollback()
            _local.counter -= 1
            raise e
        finally:
            _local.counter == 0 and _local.session.close()
    return decorator
