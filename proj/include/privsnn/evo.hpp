#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "privsnn/dataset.hpp"
#include "privsnn/rng.hpp"

namespace privsnn {

struct GenomeNode {
    int id = 0;
    double threshold = 0.5;  // fires when accumulated potential exceeds this
};

struct GenomeEdge {
    int from = 0;
    int to = 0;
    double weight = 0.0;
    int delay = 1;  // integer steps >= 1
};

/// Spiking-network genome: nodes/edges with thresholds, weights, delays.
/// Input and output nodes are protected; mutation never removes them.
struct Genome {
    std::vector<GenomeNode> nodes;
    std::vector<GenomeEdge> edges;
    std::vector<int> input_ids;
    std::vector<int> output_ids;

    bool has_node(int id) const;
    int max_node_id() const;
    bool is_io(int id) const;
};

// Structural soundness: IO nodes present, edge endpoints exist, delays >= 1,
// no duplicate node ids or parallel edges.
bool genome_valid(const Genome& g);

struct EvoConfig {
    int population_size = 100;
    double mutation_rate = 0.5;
    double crossover_rate = 0.5;
    int tournament_size = 4;
    int generations = 100;
    int elitism = 1;
    int sim_steps = 16;        // discrete simulation window
    std::uint64_t seed = 0;
    int max_hidden_init = 8;   // initial population hidden-node range
    double init_edge_density = 0.3;
    double weight_min = -1.0, weight_max = 1.0;
    double threshold_min = 0.1, threshold_max = 1.0;
    int delay_max = 16;
    int max_nodes = 64;        // cap, merging falls back to crossover beyond it
    double merge_share = 0.1;  // fraction of crossovers that merge whole parents
};

enum class BinEncoderKind { FlipFlop, Triangle };

struct BinEncoderConfig {
    BinEncoderKind kind = BinEncoderKind::FlipFlop;
    int bins = 8;     // input nodes per feature
    int window = 16;  // spike window length per presentation
};

// spike schedule: per input node, sorted spike times in [0, window)
using SpikeSchedule = std::vector<std::vector<int>>;

// Discrete-time integrate-and-fire simulation (non-leaky, reset to zero,
// strictly-greater-than-threshold firing). Injected spikes force the input
// node to fire at the scheduled step; edges deliver weight after their delay.
// Returns per-output-node spike counts over T steps.
std::vector<int> risp_simulate(const Genome& g, const SpikeSchedule& inputs, int steps);

// Bin encoders: each feature maps to `bins` input nodes whose activation
// percentage converts to floor(p/100 * window) evenly spaced spikes.
SpikeSchedule encode_bins(std::span<const double> x, const BinEncoderConfig& cfg);

// Per-bin activation percentages for one feature value; exposed for tests.
std::vector<double> bin_activations(double x, const BinEncoderConfig& cfg);

// Training-set classification accuracy; ties resolve to the lowest class.
double genome_fitness(const Genome& g, const Dataset& ds, std::span<const std::size_t> idx,
                      const BinEncoderConfig& encoder, int sim_steps);

// Best of k distinct candidates drawn without replacement; ties break toward
// the lower population index.
std::size_t tournament_select(std::span<const double> fitness, int k, SeededRng& rng);

Genome crossover(const Genome& a, const Genome& b, const EvoConfig& cfg, SeededRng& rng);
Genome mutate(const Genome& g, double rate, const EvoConfig& cfg, SeededRng& rng);

Genome random_genome(std::size_t n_inputs, std::size_t n_outputs, const EvoConfig& cfg,
                     SeededRng& rng);

struct EvoResult {
    Genome best;
    double best_fitness = 0.0;
    std::vector<double> history;  // best-ever fitness per generation
};

// Generational loop: elitism, tournament selection, crossover-or-clone, then
// mutation. Deterministic for a fixed seed.
EvoResult evolve(const Dataset& ds, std::span<const std::size_t> train_idx,
                 const EvoConfig& evo, const BinEncoderConfig& encoder);

// Normalized output spike counts (rows sum to 1, sorted descending),
// the genome's confidence analogue for the attack pipeline.
Matrix genome_confidences(const Genome& g, const Dataset& ds, std::span<const std::size_t> idx,
                          const BinEncoderConfig& encoder, int sim_steps);

struct EvoMiaResult {
    double auc = 0.0;
    double target_fitness = 0.0;
    double target_test_acc = 0.0;
};

// Evolve target and shadow genomes per the split plan, then run the
// shadow-model attack on their confidences.
EvoMiaResult run_evo_mia(const Dataset& ds, const SplitPlan& plan, const EvoConfig& evo,
                         const BinEncoderConfig& encoder);

// Textual genome serialization (node/edge list).
std::string genome_to_text(const Genome& g);
Genome genome_from_text(const std::string& text);

}  // namespace privsnn
