#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "potlab/exact_ot.hpp"
#include "potlab/experiments.hpp"
#include "potlab/measures.hpp"
#include "potlab/theory_checks.hpp"
#include "potlab/trainer.hpp"

namespace potlab::io {

using nlohmann::json;

// All file outputs go through here: write to a sibling temp file, then
// rename over the target.
void atomic_write(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// %.12g-style significant-digit formatting used for reported w values.
std::string format_sig(double v, int digits = 12);

// Measure schema: {"d": int, "points": [[f64,...],...], "weights": [f64,...]}
json measure_to_json(const DiscreteMeasure& m);
DiscreteMeasure measure_from_json(const json& j);
DiscreteMeasure load_measure(const std::string& path);
void save_measure(const DiscreteMeasure& m, const std::string& path);

json plan_to_json(const TransportPlan& plan);
json certificate_to_json(const DualCertificate& cert);

json report_to_json(const CheckReport& rep);
json reports_to_json(const std::vector<CheckReport>& reps);

json config_to_json(const TrainConfig& cfg);
TrainConfig config_from_json(const json& j);

json fragility_to_json(const FragilityResult& res);

// Checkpoints: <prefix>.bin holds the little-endian f64 flat parameter array,
// <prefix>.json the sidecar {"widths": [...], "activations": [...], "count": N}.
void save_checkpoint(const MlpNet& net, const std::string& prefix);
MlpNet load_checkpoint(const std::string& prefix);

// metrics.csv with header step,recon,penalty,total,w_eval,ms.
void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path);

}  // namespace potlab::io
