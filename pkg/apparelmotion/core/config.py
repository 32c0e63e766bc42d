"""Configuration classes"""
from enum import Enum
import json
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Type, TypeVar

from pydantic import BaseSettings, Field, ValidationError, root_validator, validator
import toml

from apparelmotion.core.base_model import BaseImmutableModel
from apparelmotion.core.exceptions import ApparelMotionException
from apparelmotion.synth.spec import SynthCharacterSpec


class InvalidConfigException(ApparelMotionException):
    """Indicates an invalid configuration"""


class BodyVariant(str, Enum):
    """How per-joint body features are fused into one feature per vertex."""

    ATTENTION = "attention"
    NO_GEODESIC = "no-geodesic"
    SORT_GEODESIC = "sort-geodesic"


class OptimizerConfig(BaseImmutableModel):
    """AdamW configuration class"""

    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01


class SegmentationConfig(BaseImmutableModel):
    """Apparel segmentation network configuration class"""

    encoder_widths: Tuple[int, ...] = (64, 128)
    decoder_widths: Tuple[int, ...] = (64,)
    threshold: float = 0.5
    epochs: int = 300


class BodyConfig(BaseImmutableModel):
    """Body deformation network configuration class"""

    feature_dim: int = 64
    feature_widths: Tuple[int, ...] = (64,)
    attention_widths: Tuple[int, ...] = (16,)
    encoder_widths: Tuple[int, ...] = (128,)
    decoder_widths: Tuple[int, ...] = (128,)
    variant: BodyVariant = BodyVariant.ATTENTION
    sort_top_k: int = 4
    epochs: int = 150
    frames_per_step: int = 4
    lambda_vertex: float = 1.0
    lambda_edge: float = 100.0
    lambda_smooth: float = 0.01


class ApparelConfig(BaseImmutableModel):
    """Apparel deformation network configuration class"""

    m_dim: int = 32
    motion_widths: Tuple[int, ...] = (64,)
    edge_conv_blocks: int = 3
    hidden_width: int = 128
    decoder_widths: Tuple[int, ...] = (64,)
    clip_len: int = 10
    history_k: int = 3
    epochs: int = 15
    windows_per_sample: int = 2
    lambda_vertex: float = 1.0
    lambda_edge: float = 100.0

    # pylint: disable=no-self-argument
    @validator("history_k")
    def history_covers_acceleration(cls, history_k: int) -> int:
        if history_k < 3:
            raise InvalidConfigException(
                f"history_k must be at least 3 to form accelerations, got {history_k}"
            )
        return history_k


class RefineConfig(BaseImmutableModel):
    """Joint refinement network configuration class"""

    widths: Tuple[int, ...] = (64, 64)
    lambda_vertex: float = 1.0
    lambda_edge: float = 100.0
    lambda_reg: float = 0.01


class SynthConfig(BaseImmutableModel):
    """Synthetic corpus configuration class"""

    characters: int = 10
    motions: int = 10
    frames: int = 120
    fps: float = 30.0
    test_characters: int = 2
    test_motions: int = 2
    character: SynthCharacterSpec = Field(default_factory=SynthCharacterSpec)

    # pylint: disable=no-self-argument
    @root_validator(skip_on_failure=True)
    def held_out_fits(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        for total, held_out in (("characters", "test_characters"), ("motions", "test_motions")):
            if not 0 <= values[held_out] < values[total]:
                raise InvalidConfigException(
                    f"{held_out} must lie in [0, {total}), "
                    f"got {values[held_out]} of {values[total]}"
                )
        if values["frames"] < 2:
            raise InvalidConfigException(f"frames must be at least 2, got {values['frames']}")
        return values


class TrainingConfig(BaseImmutableModel):
    """Training driver configuration class"""

    checkpoint_every: int = 1
    max_train_samples: Optional[int] = None


GenericConfig = TypeVar("GenericConfig", bound="Config")


class Config(BaseImmutableModel):
    """Top level configuration class"""

    seed: int = 0
    num_joints: int = 40
    segmentation: SegmentationConfig = Field(default_factory=SegmentationConfig)
    body: BodyConfig = Field(default_factory=BodyConfig)
    apparel: ApparelConfig = Field(default_factory=ApparelConfig)
    refine: RefineConfig = Field(default_factory=RefineConfig)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    training: TrainingConfig = Field(default_factory=TrainingConfig)
    synth: SynthConfig = Field(default_factory=SynthConfig)

    @classmethod
    def from_path(
        cls: Type[GenericConfig],
        path: Optional[Path] = None,
        overrides: Optional[Mapping[str, Any]] = None,
    ) -> GenericConfig:
        """Load a Config by layering field defaults, an optional toml file and dotted-key
        overrides such as {"apparel.clip_len": 10}."""
        config_dict: Dict[str, Any] = {}
        source = "<defaults>"
        if path is not None:
            source = str(path)
            try:
                with open(path, "r") as fp:
                    config_dict = dict(toml.loads(fp.read()))
            except OSError as ose:
                raise InvalidConfigException(f"Unable to read conf file {source}: {ose}") from ose
            except toml.TomlDecodeError as tde:
                raise InvalidConfigException(f"Unable to parse conf file {source}: {tde}") from tde
        for dotted_key, value in (overrides or {}).items():
            _set_dotted(config_dict, dotted_key, value)
        try:
            return cls(**config_dict)
        except InvalidConfigException as ice:
            raise InvalidConfigException(f"Error in conf file {source}: {str(ice)}") from ice
        except ValidationError as ve:
            raise InvalidConfigException(f"Error in conf file {source}: {str(ve)}") from ve

    def to_toml(self) -> str:
        """Render this Config as a toml document which from_path reads back unchanged."""
        return toml.dumps(json.loads(self.json()))


class RuntimeSettings(BaseSettings):
    """Settings read from the environment, e.g. APPARELMOTION_THREADS=4"""

    threads: int = 1
    animation_cache: int = 32

    class Config:
        """Pydantic config"""

        env_prefix = "APPARELMOTION_"


def parse_override(assignment: str) -> Tuple[str, Any]:
    """Parse a `section.key=value` flag into its dotted key and a toml-typed value.

    >>> parse_override("apparel.clip_len=12")
    ('apparel.clip_len', 12)
    >>> parse_override("body.variant=sort-geodesic")
    ('body.variant', 'sort-geodesic')
    """
    if "=" not in assignment:
        raise InvalidConfigException(f"Override '{assignment}' is not of the form key=value")
    key, raw_value = assignment.split("=", 1)
    try:
        value = toml.loads(f"value = {raw_value}")["value"]
    except toml.TomlDecodeError:
        value = raw_value
    return key.strip(), value


def _set_dotted(config_dict: Dict[str, Any], dotted_key: str, value: Any) -> None:
    parts = dotted_key.split(".")
    node = config_dict
    for part in parts[:-1]:
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            raise InvalidConfigException(f"Override {dotted_key} descends into a non-section")
        node = child
    node[parts[-1]] = value
