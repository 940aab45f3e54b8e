from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    NCF_OUTPUT_ROOT: str = "runs"
    NCF_LOG_LEVEL: str = "INFO"
    NCF_SERIAL: bool = True  # stable reduction order, no worker processes
    NCF_WORKERS: int = 1

    model_config = SettingsConfigDict(env_file=".env", extra="ignore")


settings = Settings()
