#ifndef COVEX_TOOLS_COMMANDS_HPP
#define COVEX_TOOLS_COMMANDS_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "config.hpp"
#include "covex/metrics.hpp"

namespace covex::cli {

// Hydrate, filter, merge and split the annotation files into <output>/prepared.
void cmd_prepare(const RunConfig& config);
// Train one family for one event; writes <output>/models/<event>.<family>.covex.
void cmd_train(const RunConfig& config, ModelFamily family, EventType event);
// Grid-search slot thresholds on the validation split; writes thresholds.json.
void cmd_tune_thresholds(const RunConfig& config);
// Scores every available checkpoint. `split` is "valid" or "train"; a
// non-empty `corpus` evaluates that annotation file instead.
EvalReport cmd_evaluate(const RunConfig& config, const std::string& split,
                        const std::filesystem::path& corpus);
void cmd_predict(const RunConfig& config, const std::filesystem::path& input,
                 const std::filesystem::path& output);
// Trains, tunes and evaluates a named ablation under <output>/ablations/<name>.
EvalReport cmd_ablation(const RunConfig& config, const std::string& name);
// Writes a template-generated annotated corpus (text included).
void cmd_synth(const std::filesystem::path& output, std::size_t examples_per_event,
               const std::vector<EventType>& events, std::uint64_t seed);

}  // namespace covex::cli

#endif  // COVEX_TOOLS_COMMANDS_HPP
