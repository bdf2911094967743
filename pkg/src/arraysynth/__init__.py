"""arraysynth: metasurface patch-array synthesis and analysis toolkit."""

from .constants import C0, C_DESIGN
from .errors import (AnalysisError, ArgumentError, DomainError,
                     ObjectiveEvaluationError, ParseError, RangeError,
                     ToolkitError, ValidationError)
from .farfield import (ArrayLayout, ElementModel, FarFieldPattern,
                       PatternMetrics, apply_element_pattern, array_factor,
                       directivity, element_pattern, pattern_metrics,
                       principal_cut, realized_gain, uniform_excitations)
from .feednet import (ConnectorSpec, FeedTree, LeafExcitation, LossBudget,
                      SParameterBlock, WilkinsonStage, build_corporate_tree,
                      cascade_abcd, identity_two_port, input_impedance,
                      leaf_excitations, network_loss_budget, wilkinson_sparams)
from .geometry import export_geometry, geometry_json, validate_geometry_doc
from .msline import (MicrostripLine, Substrate, eps_eff, guided_wavelength,
                     line_loss, load_substrate_catalog, width_synthesize,
                     z0_analyze)
from .optimize import (DesignModels, DesignVector, ObjectiveSpec,
                       ObjectiveValue, objective, seeded_feasible_design,
                       trust_region_minimize)
from .touchstone import (TouchstoneDocument, parse_touchstone,
                         parse_touchstone_document, write_touchstone)
from .unitcell import (ApertureDims, LayerStack, PatchDims, SurrogateParams,
                       UnitCellGeometry, aperture_dims, default_stack,
                       patch_resonant_freq, patch_resonant_length,
                       reference_cell, reference_notes, sievenpiper_resonance,
                       surrogate_s11, synth_unitcell, synthesis_report)

__version__ = "0.1.0"
