# This file contains the loaders for the different components of the system
from __future__ import annotations

import os
from string import Template
from typing import TYPE_CHECKING, Optional

import yaml

from scanspectra.common.dict_utils import recursive_update
from scanspectra.common.exceptions import ConfigException

if TYPE_CHECKING:
    from scanspectra.odm.models.config import Config

DEFAULT_CONFIG_PATH = "/etc/scanspectra/config.yml"

config_cache = {}


def env_substitute(buffer):
    """Replace environment variables in the buffer with their value.

    Use the built in template expansion tool that expands environment variable style strings ${}
    We set the idpattern to none so that $abc doesn't get replaced but ${abc} does.

    Case insensitive.
    Variables that are found in the buffer, but are not defined as environment variables are ignored.
    """
    return Template(buffer).safe_substitute(os.environ, idpattern=None, bracedidpattern='(?a:[_a-z][_a-z0-9]*)')


def _get_config(yml_config=None):
    from scanspectra.odm.models.config import Config

    if yml_config is None:
        yml_config = os.environ.get('SCAN_SPECTRA_CONFIG', DEFAULT_CONFIG_PATH)

    # Initialize a default config
    config = Config().as_primitives()

    # Load modifiers from the yaml config
    if os.path.exists(yml_config):
        with open(yml_config) as yml_fh:
            yml_data = yaml.safe_load(env_substitute(yml_fh.read()))
            if yml_data:
                config = recursive_update(config, yml_data)

    if 'SCAN_SPECTRA_LOG_LEVEL' in os.environ:
        config['logging']['log_level'] = os.environ['SCAN_SPECTRA_LOG_LEVEL']

    if os.environ.get('SCAN_SPECTRA_THREADS'):
        config['engine']['threads'] = os.environ['SCAN_SPECTRA_THREADS']

    try:
        return Config(config)
    except (ValueError, KeyError, TypeError) as e:
        raise ConfigException(f"Invalid configuration in {yml_config}: {e}")


def get_config(yml_config: Optional[str] = None) -> Config:
    if yml_config not in config_cache:
        config_cache[yml_config] = _get_config(yml_config=yml_config)
    return config_cache[yml_config]


def get_worker_count(config: Optional[Config] = None) -> int:
    """Worker threads available to the analysis pools.

    SCAN_SPECTRA_THREADS is read on every call so a process can narrow its pool after the
    configuration was cached.
    """
    env_threads = os.environ.get('SCAN_SPECTRA_THREADS')
    if env_threads:
        try:
            threads = int(env_threads)
        except ValueError:
            raise ConfigException(f"SCAN_SPECTRA_THREADS must be an integer, got {env_threads!r}")
    else:
        if config is None:
            config = get_config()
        threads = config.engine.threads

    if threads <= 0:
        threads = os.cpu_count() or 1
    return threads
