from typing import Dict, List

from fluidmatch.application import database
from fluidmatch.application.abstracts import ResultsRepository
from fluidmatch.application.logging_factory import Logger

_columns = [c.name for c in database.SweepRow.__table__.columns if c.name != 'id']


class ResultsSQLiteRepository(ResultsRepository):
    def __init__(self, session):
        self.session = session

    @classmethod
    def instance(cls, path: str) -> 'ResultsSQLiteRepository':
        Logger.repository.debug('Opening results store at %s', path)
        return cls(database.init_sqlite(path))

    @database.atomic
    def save_rows(self, rows: List[Dict]):
        session = self.session()
        for row in rows:
            record = {column: row.get(column) for column in _columns}
            if record['mu'] is not None:
                record['mu'] = str(record['mu'])
            session.add(database.SweepRow(**record))
        Logger.repository.debug('Saved %s rows', len(rows))

    def close(self):
        self.session.remove()
