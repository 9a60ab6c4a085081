"""Deterministic multi-parent evolutionary synthesis of micro conv nets.

Networks are encoded as genomes whose clusters and synapses carry
positional gene tags inherited from a common ancestor.  Offspring are
sampled by mating the tagged strengths of several parents under an
environmental resource model, then trained briefly and measured.  The
package reproduces a tagged-versus-untagged mating comparison across
resource sweeps at desk scale.
"""

__version__ = "0.1.0"

from .dataset import (DataConfig, LabeledImages, load_dataset,
                      load_idx_images, load_idx_labels, stratified_subset,
                      synthetic_blobs, write_idx_images, write_idx_labels)
from .errors import (AlignmentError, ArchMismatchError, ConfigError,
                     DataError, EvoSynthError, FormatError,
                     InvariantError, MalformedAncestorError, ShapeError,
                     StateError)
from .evolution import (ExperimentPlan, StopRule, SweepConfig, run_combo,
                        run_experiment_sweep, select_parents)
from .genome import (ClusterTag, LayerGenome, NetworkGenome, SynapseTag,
                     aligned_strengths, assign_gene_tags, cluster_exists,
                     cluster_strength, genome_from_dict, genome_to_dict,
                     load_genome, save_genome, storage_bytes)
from .kernels import active_backend, backend_functions
from .mating import (MODE_TAGGED, MODE_UNTAGGED, MatingConfig,
                     eligible_cluster_tags, mate_cluster_strengths,
                     mate_synapse_strengths, required_parent_count)
from .nnet import (GradCheckReport, MicroNet, MicroNetSpec, TrainerConfig,
                   grad_check, make_ancestor_genome)
from .report import (CSV_COLUMNS, MetricsRow, append_metrics_csv,
                     read_metrics_csv, render_scatter_svg, render_series_svg)
from .synthesis import (EnvironmentalModel, SynthesisConfig,
                        cluster_survival_prob, inherit_weight,
                        normalize_magnitudes, synapse_survival_prob,
                        synthesize_offspring)
