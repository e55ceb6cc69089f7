"""luvtsim: 2D elastodynamic FDTD simulator and labeled dataset factory.

Synthesizes wave-propagation image sequences over a metal cross-section
with optional cavity defects, labels frames by straight-line wave arrival,
and emits training-ready PNG datasets with a JSONL manifest. The stencil
kernels run through a compiled extension when available and fall back to
NumPy otherwise (see luvtsim.backend).
"""

__version__ = "0.1.0"

from .backend import BACKEND, has_native_kernels
from .config import RunConfig, default_config, load_config, parse_config
from .dataset import (
    BASELINE_LOCATION_ID,
    DatasetManifest,
    GenerationError,
    LabelRule,
    NoiseModel,
    SampleRecord,
    add_measurement_noise,
    generate_dataset,
    label_frames,
    sample_defect_locations,
    verify_labels,
)
from .errors import (
    ConfigParseError,
    ConfigurationError,
    ImageWriteError,
    InvalidMaterialError,
    InvalidResolutionError,
    LuvtsimError,
    NoArrivalError,
    NumericalInstabilityError,
    PlacementError,
)
from .imaging import (
    FrameSpec,
    ImageFrame,
    decode_image,
    encode_image,
    extract_snapshot,
    normalize_sequence,
)
from .materials import (
    DefectSpec,
    MaterialField,
    MaterialSpec,
    Rect,
    SpecimenGeometry,
    insert_cavity,
    lame_from_speeds,
    rasterize_specimen,
    speeds_from_lame,
)
from .solver import (
    AbsorbingLayerSpec,
    SolverParams,
    TransducerSource,
    VerticalPointForce,
    WavefieldState,
    apply_source,
    iter_simulation,
    load_wavefield,
    max_stable_dt,
    run_simulation,
    save_wavefield,
    step,
    total_energy,
)
from .sources import (
    PulseWaveform,
    ReceiverSpec,
    Trace,
    TransducerSpec,
    first_arrival_time,
    record_receiver,
    sample_waveform,
)

__all__ = [name for name in dir() if not name.startswith("_")]
