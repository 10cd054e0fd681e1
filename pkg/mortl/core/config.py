"""Configuration for the application."""

import os

from mortl.core.exceptions import ConfigError


class Config:
    """Configuration settings for the mortl project.

    Attributes
    ----------
    PROJECT_NAME : str
        The name of the project.
    VERSION : str
        The version of the project.
    DEFAULT_SEED : int
        Seed of the random generators when MORTL_SEED is unset.
    SEED_ENV_VAR : str
        Environment variable overriding the default seed.

    """

    PROJECT_NAME = "mortl"
    VERSION = "0.1.0"
    DEFAULT_SEED = 0
    SEED_ENV_VAR = "MORTL_SEED"

    @classmethod
    def seed(cls) -> int:
        """Resolve the random seed.

        Returns
        -------
        int
            The value of MORTL_SEED when set, the default seed otherwise.

        Raises
        ------
        ConfigError
            If MORTL_SEED is set to something that is not an integer.

        """
        raw = os.environ.get(cls.SEED_ENV_VAR)
        if raw is None or raw.strip() == "":
            return cls.DEFAULT_SEED
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(
                f"{cls.SEED_ENV_VAR} must be an integer, got {raw!r}"
            )
