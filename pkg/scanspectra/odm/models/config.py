from scanspectra import odm
from scanspectra.common import constants


@odm.model(description="Logging Configuration")
class Logging(odm.Model):
    log_level: str = odm.Enum(values=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL", "DISABLED"],
                              description="What level of logging should we have?")
    log_to_console: bool = odm.Boolean(description="Should we log to console?")
    log_to_file: bool = odm.Boolean(description="Should we log to files?")
    log_directory: str = odm.Keyword(description="If `log_to_file: true`, what is the directory to store logs?")
    log_as_json: bool = odm.Boolean(description="Log in JSON format?")


DEFAULT_LOGGING = {
    "log_directory": "/var/log/scanspectra/",
    "log_as_json": False,
    "log_level": "WARNING",
    "log_to_console": True,
    "log_to_file": False,
}


@odm.model(description="Numerical tolerances")
class Tolerances(odm.Model):
    probability_sum: float = odm.Float(min=0, description="Allowed deviation of a distribution's total from 1")
    stochastic_row: float = odm.Float(min=0, description="Allowed deviation of a kernel row sum from 1")
    stationarity: float = odm.Float(min=0, description="Allowed entrywise deviation of pi.M from pi")
    projection: float = odm.Float(min=0, description="Detailed balance and idempotence residual limit")
    clamp: float = odm.Float(min=0, description="Entries below this magnitude are set to exactly 0")
    verification: float = odm.Float(min=0, description="Slack added to every bound before a verdict")


DEFAULT_TOLERANCES = {
    "probability_sum": constants.PROBABILITY_SUM_TOL,
    "stochastic_row": constants.STOCHASTIC_ROW_TOL,
    "stationarity": constants.STATIONARITY_TOL,
    "projection": constants.PROJECTION_TOL,
    "clamp": constants.CLAMP_TOL,
    "verification": constants.VERIFY_TOL,
}


@odm.model(description="Exact analysis engine")
class Engine(odm.Model):
    state_cap: int = odm.Integer(min=1, description="Largest product space that may be enumerated")
    horizon: int = odm.Integer(min=1, description="Largest t accepted by the exact distance evolution")
    threads: int = odm.Integer(min=0, description="Worker threads, 0 means one per CPU")
    tolerances: Tolerances = odm.compound(Tolerances, default=DEFAULT_TOLERANCES)


DEFAULT_ENGINE = {
    "state_cap": constants.DEFAULT_STATE_CAP,
    "horizon": constants.DEFAULT_HORIZON,
    "threads": 0,
    "tolerances": DEFAULT_TOLERANCES,
}


@odm.model(description="Stopping-time simulation")
class Simulation(odm.Model):
    max_events: int = odm.Integer(min=1, description="Capacity of the stopping-time buffers per trajectory")
    max_updates: int = odm.Integer(min=1, description="Site updates after which a trajectory is abandoned")
    concentration_c_prime: float = odm.Float(min=0, description="Default horizon constant of the residue test")


DEFAULT_SIMULATION = {
    "max_events": 1_000_000,
    "max_updates": 100_000_000,
    "concentration_c_prime": constants.CONCENTRATION_C_PRIME,
}


@odm.model(description="scanspectra configuration")
class Config(odm.Model):
    logging: Logging = odm.compound(Logging, default=DEFAULT_LOGGING, description="Logging configuration")
    engine: Engine = odm.compound(Engine, default=DEFAULT_ENGINE, description="Exact analysis engine")
    simulation: Simulation = odm.compound(Simulation, default=DEFAULT_SIMULATION,
                                          description="Stopping-time simulation")
    seed: int = odm.Integer(min=0, default=constants.DEFAULT_SEED, description="Default seed of every experiment")


DEFAULT_CONFIG = {
    "logging": DEFAULT_LOGGING,
    "engine": DEFAULT_ENGINE,
    "simulation": DEFAULT_SIMULATION,
    "seed": constants.DEFAULT_SEED,
}


UNITS = ["steps", "sweeps"]
SUITE_NAMES = ["scan-gap", "sequence-gap", "supersequence-gap", "laplacian", "converse", "mixing", "all"]
# Short names of the command line interface
SUITE_ALIASES = {
    "cor32": "scan-gap",
    "thm31": "sequence-gap",
    "thm36": "supersequence-gap",
    "lemma27": "laplacian",
    "thm35": "converse",
    "thm25": "mixing",
}
SUITES = SUITE_NAMES + list(SUITE_ALIASES)


def canonical_suite(name: str) -> str:
    return SUITE_ALIASES.get(name, name)


@odm.model(description="One command line run, echoed into its report")
class RunConfig(odm.Model):
    command: str = odm.Keyword(description="Subcommand that produced the report")
    model: str = odm.Optional(odm.Keyword(), description="Builtin model string or path to a model file")
    seed: int = odm.Integer(min=0, max=(1 << 64) - 1, default=constants.DEFAULT_SEED)
    state_cap: int = odm.Integer(min=1, default=constants.DEFAULT_STATE_CAP)
    tolerances: dict[str, float] = odm.mapping(odm.Float(min=0), default={},
                                               description="Overrides of the engine tolerances")
    epsilon: float = odm.Optional(odm.Float(min=0, max=1))
    t_max: int = odm.Optional(odm.Integer(min=1))
    unit: str = odm.Optional(odm.Enum(values=UNITS))
    suite: str = odm.Optional(odm.Enum(values=SUITES))
    n: list[int] = odm.sequence(odm.Integer(min=1), default=[], description="Site counts")
    delta: list[float] = odm.sequence(odm.Float(min=0, max=1), default=[])
    trials: int = odm.Optional(odm.Integer(min=1), description="Sampled sequences or trajectories, at least one")
    s: int = odm.Optional(odm.Integer(min=1), description="Excitation index of the stopping-time checks")
    fugacity: float = odm.Optional(odm.Float(min=0), description="Hardcore fugacity of the compact chain")
    sequence: str = odm.Optional(odm.Keyword(), description="Update sequence, inline or a file path")
    out: str = odm.Optional(odm.Keyword())
    csv: str = odm.Optional(odm.Keyword())

    def tolerance(self, name: str, default: float) -> float:
        return self.tolerances.get(name, default)
