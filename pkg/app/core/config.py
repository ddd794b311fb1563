"""Application configuration via environment variables."""

from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Settings loaded from ORTHOLIP_* environment variables or .env file."""
    model_config = SettingsConfigDict(
        env_prefix="ORTHOLIP_", env_file=".env", env_file_encoding="utf-8", extra="ignore"
    )

    # Application
    app_name: str = "orthotropic-lipschitz"
    debug: bool = False
    log_dir: Path = Path.home() / ".logs" / "ortholip"

    # Report archive
    database_url: str = "sqlite:///./ortholip_reports.db"
    archive_reports: bool = False
    results_dir: Path = Path("results")

    # Workers for concurrent solves and study levels
    threads: int = 1

    # Exponent schedules
    eps0: float = 0.5
    jmax: int = 60
    beta_max_levels: int = 10_000
    rel_tol: float = 1e-12

    # Solver
    solver_tol: float = 1e-10
    solver_max_iters: int = 50_000

    # Verification
    acceptance_constant: float = 16.0
    final_growth_tol: float = 0.05
    study_spread_tol: float = 0.25
    degenerate_threshold: float = 1e-14
    power_exponent_cap: float = 64.0


settings = Settings()
