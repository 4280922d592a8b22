from dotenv import load_dotenv
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


load_dotenv()


class FaseSettings(BaseSettings):
    """Environment-driven defaults for the command line surface.

    Every field can be overridden with a ``FASE_`` prefixed variable, either
    exported or placed in a ``.env`` file next to the working directory.
    """

    model_config = SettingsConfigDict(env_prefix='FASE_', env_file='.env', extra='ignore')

    iterations: int = Field(default=250, ge=1)
    gamma: float = Field(default=0.5, gt=0.0, le=1.0)
    rho_hat: float = Field(default=0.8, gt=0.0, le=1.0)
    block: int = Field(default=16, ge=1)
    support: int = Field(default=24, ge=0)
    fft_threshold: int = Field(default=64, ge=1)
    max_area: int = Field(default=4096, ge=1)
    max_dict: int = Field(default=4096, ge=1)
    log_level: str = 'WARNING'
    workers: int | None = None


def get_settings() -> FaseSettings:
    return FaseSettings()
