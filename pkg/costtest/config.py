from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_file=".env", env_file_encoding="utf-8", extra="ignore")

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_JSON: bool = False

    # Monte Carlo harness
    N_JOBS: int = 1
    MAX_FAILURE_FRACTION: float = 0.2

    # Oracle guard: the loop implementation is O(n1 * n2 * q) in pure Python
    BRUTE_FORCE_MAX_N: int = 500

    # CLI
    OUTPUT_DIR: str = "results"


settings = Settings()
