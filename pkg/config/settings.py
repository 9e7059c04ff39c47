from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import Field, field_validator

class Settings(BaseSettings):
    LOG_LEVEL: str = Field(default="INFO", validation_alias="LOG_LEVEL")

    # Positivity slack shared by fuzzing, compat and verdicts
    MHQMO_TOL: float = Field(default=1e-10, validation_alias="MHQMO_TOL")

    HERMITIAN_TOL: float = Field(default=1e-12, validation_alias="HERMITIAN_TOL")
    MERGE_TOL: float = Field(default=1e-10, validation_alias="MERGE_TOL")
    COMMUTE_TOL: float = Field(default=1e-10, validation_alias="COMMUTE_TOL")

    # Jacobi eigensolver
    JACOBI_MAX_SWEEPS: int = Field(default=100, validation_alias="JACOBI_MAX_SWEEPS")
    JACOBI_REL_TOL: float = Field(default=1e-14, validation_alias="JACOBI_REL_TOL")

    # Threshold search
    BISECTION_TOL: float = Field(default=1e-9, validation_alias="BISECTION_TOL")
    PRESCAN_POINTS: int = Field(default=101, validation_alias="PRESCAN_POINTS")

    # Grid points evaluated concurrently by `scan`
    SCAN_BATCH_SIZE: int = Field(default=16, validation_alias="SCAN_BATCH_SIZE")

    FLOAT_DIGITS: int = Field(default=9, validation_alias="FLOAT_DIGITS")

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
        case_sensitive=False,
    )

    @field_validator("MHQMO_TOL", "HERMITIAN_TOL", "MERGE_TOL", "COMMUTE_TOL", "BISECTION_TOL")
    @classmethod
    def _non_negative(cls, value: float) -> float:
        if value < 0:
            raise ValueError("tolerances must be non-negative")
        return value

    @field_validator("PRESCAN_POINTS")
    @classmethod
    def _enough_points(cls, value: int) -> int:
        if value < 2:
            raise ValueError("PRESCAN_POINTS must be at least 2")
        return value

settings = Settings()
