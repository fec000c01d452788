"""Pipeline configuration: one JSON/TOML file drives a full run."""

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

try:
    import tomllib  # py >= 3.11
except ModuleNotFoundError:
    import tomli as tomllib

ALL_STAGES = ("reconstruct", "skeletonize", "simulate", "render")
DEFAULT_STAGES = ("reconstruct", "skeletonize", "render")


@dataclass
class InputConfig:
    kind: str = "phantom"          # "phantom" | "mask" | "mesh"
    phantom: str = "y"             # "y" | "cylinder" (kind == "phantom")
    path: str = ""                 # mask/mesh file (other kinds)
    voxel: float = 0.5e-3          # phantom rasterization voxel


@dataclass
class SdfConfig:
    voxel_size: float = 0.5e-3
    padding: int = 3
    save_debug_grid: bool = False


@dataclass
class SkeletonConfig:
    n_surface_samples: int = 4000
    prune_length: float = 5e-3
    base_spacing: float = 1e-3
    curvature_gain: float = 2e-3
    bifurcation_gain: float = 2.0
    tau: float = 5e-3


@dataclass
class RobotConfigBlock:
    noise: bool = True
    params: dict = field(default_factory=dict)  # RobotParams overrides


@dataclass
class CameraConfig:
    width: int = 600
    height: int = 600
    fx: float = 300.0
    fy: float = 300.0
    cx: float = 300.0
    cy: float = 300.0


@dataclass
class RenderConfig:
    spp: int = 4
    exposure: float = 1.0
    light_intensity: float = 3e-5
    light_falloff: float = 20.0
    base_color: tuple = (0.78, 0.35, 0.32)
    roughness: float = 0.35
    metallic: float = 0.0
    specular_weight: float = 1.0
    texture: bool = True
    texture_scale: float = 1.5e-3
    point_cloud_stride: int = 8


@dataclass
class NoiseConfig:
    beta: float = 0.03
    spectrum_path: str = ""        # archive from `noise-fit`; synthetic if empty
    per_channel: bool = False


@dataclass
class PipelineConfig:
    seed: int = 0
    output_root: str = "out"
    patient_id: str = "patient_001"
    stages: tuple = DEFAULT_STAGES
    max_sequences: int = 0         # 0 = all root-to-leaf paths
    max_frames: int = 0            # 0 = unlimited per sequence
    threads: int = 0               # kernel worker threads, 0 = library default
    input: InputConfig = field(default_factory=InputConfig)
    sdf: SdfConfig = field(default_factory=SdfConfig)
    skeleton: SkeletonConfig = field(default_factory=SkeletonConfig)
    robot: RobotConfigBlock = field(default_factory=RobotConfigBlock)
    camera: CameraConfig = field(default_factory=CameraConfig)
    render: RenderConfig = field(default_factory=RenderConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)

    def validate(self) -> "PipelineConfig":
        unknown = set(self.stages) - set(ALL_STAGES)
        if unknown:
            raise ValueError(f"unknown stages: {sorted(unknown)}")
        if self.input.kind not in ("phantom", "mask", "mesh"):
            raise ValueError(f"unknown input kind {self.input.kind!r}")
        if self.input.kind != "phantom":
            if not self.input.path:
                raise ValueError("input.path is required for mask/mesh inputs")
            if not Path(self.input.path).exists():
                raise ValueError(f"input path does not exist: {self.input.path}")
        elif self.input.phantom not in ("y", "cylinder"):
            raise ValueError(f"unknown phantom {self.input.phantom!r}")
        if self.noise.spectrum_path and not Path(self.noise.spectrum_path).exists():
            raise ValueError(f"spectrum archive not found: {self.noise.spectrum_path}")
        if self.seed is None:
            raise ValueError("seed is mandatory for generation")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        def sub(klass, key):
            return klass(**doc.get(key, {}))

        known = {f for f in cls.__dataclass_fields__}
        top = {k: v for k, v in doc.items()
               if k in known and k not in ("input", "sdf", "skeleton", "robot",
                                           "camera", "render", "noise")}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**top,
                  input=sub(InputConfig, "input"),
                  sdf=sub(SdfConfig, "sdf"),
                  skeleton=sub(SkeletonConfig, "skeleton"),
                  robot=sub(RobotConfigBlock, "robot"),
                  camera=sub(CameraConfig, "camera"),
                  render=sub(RenderConfig, "render"),
                  noise=sub(NoiseConfig, "noise"))
        cfg.stages = tuple(cfg.stages)
        return cfg

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        path = Path(path)
        if not path.exists():
            raise ValueError(f"config file not found: {path}")
        if path.suffix == ".toml":
            doc = tomllib.loads(path.read_text())
        else:
            doc = json.loads(path.read_text())
        return cls.from_dict(doc)
