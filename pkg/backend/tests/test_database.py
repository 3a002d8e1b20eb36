"""
Test cases for the run registry model and session management.
"""
import uuid

from sqlalchemy import select

from backend.database.models import AsyncSessionLocal, Base, Run, engine, init_db


class TestRunModel:
    """Test suite for the Run model."""

    def test_run_fields(self):
        """TC-DB-001: A run keeps its scenario, seed and status."""
        run = Run(id="r1", scenario="straight", seed=4, status="running")
        assert run.scenario == "straight"
        assert run.seed == 4
        assert run.status == "running"
        assert run.ari is None


class TestDatabaseSchema:
    """Test suite for database schema."""

    def test_base_metadata(self):
        """TC-DB-002: The runs table carries score and error columns."""
        table = Base.metadata.tables["runs"]
        for column in ("id", "scenario", "seed", "status", "config", "ari", "nmi", "purity",
                       "n_clusters", "n_clusters_true", "error", "created_at", "updated_at"):
            assert column in table.columns


class TestSessions:
    """Test suite for async persistence."""

    async def test_round_trip(self):
        """TC-DB-003: A stored run is read back with its defaults filled in."""
        # pooled connections may belong to another test's event loop
        await engine.dispose()
        await init_db()
        run_id = str(uuid.uuid4())
        async with AsyncSessionLocal() as session:
            session.add(Run(id=run_id, scenario="plus_crossing", seed=1, config='{"seed": 1}'))
            await session.commit()

        async with AsyncSessionLocal() as session:
            stored = (await session.execute(select(Run).where(Run.id == run_id))).scalar_one()
            assert stored.status == "pending"
            assert stored.created_at is not None
            assert stored.config == '{"seed": 1}'
        await engine.dispose()
