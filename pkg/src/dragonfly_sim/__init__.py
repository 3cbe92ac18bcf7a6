"""Simulation and 3D localization of intra-chirp-modulated backscatter tags
read by a time-divided MIMO FMCW radar."""

from .core import (
    RadarConfig,
    SPEED_OF_LIGHT,
    beat_frequency,
    chirp_slope,
    default_radar,
    doppler_frequency,
    max_acceleration,
    max_unambiguous_range,
    range_from_beat,
    range_resolution,
    velocity_ambiguity,
    wavelength,
)
from .scenario import ClutterScatterer, PipelineSettings, Scenario, TagScenario, load_scenario
from .synth import IfFrame, synth_chirp, synth_sequence, tag_if_phases
from .chirp2d import (
    AmbiguousPair,
    Detection,
    NoTagDetected,
    PeakPair,
    RangeAzimuthSpectrum,
    TagChannel,
    detect_tag_peaks,
    localize2d,
    range_azimuth_spectrum,
)
from .elevation import (
    ElevationTracker,
    PhaseRow,
    PhaseSeries,
    alpha_beta,
    disambiguate_accelerating,
    disambiguate_constant_velocity,
    elevation_from_delta,
    handle_exception,
    radial_phase,
)
from .tracker import (
    ErrorReport,
    TrackPoint,
    assemble_track,
    channel_capacity,
    channelize,
    error_report,
)
from .rfdesign import LensDesign, LinkBudget, field_of_view, lens_radius, max_range, range_vs_angle
from .baseline import RangeDopplerMap, range_doppler_map, slow_time_localize
from .pipeline import PipelineResult, run_pipeline

__all__ = [name for name in dir() if not name.startswith("_")]
