#pragma once

#include <string>
#include <vector>

#include "timberdiff/pipeline.hpp"

namespace timberdiff::io {

struct InputDigest {
    std::string path;
    std::string sha256;
};

struct Provenance {
    std::vector<InputDigest> inputs;
    std::string timestamp;  // RFC 3339; excluded from determinism comparisons
};

/// SHA-256 of a file's bytes, lowercase hex.
std::string sha256_file(const std::string& path);

/// Versioned report (schema 1). Per-point distances are included only when
/// per_point is set. Deterministic except for the timestamp field.
std::string report_to_json(const EvaluationResult& result, const PipelineConfig& config,
                           const Provenance& provenance, bool per_point);
void save_report_json(const EvaluationResult& result, const PipelineConfig& config,
                      const Provenance& provenance, bool per_point, const std::string& path);

/// Summary table: entity,level,mean_mm,mse_mm2,std_mm,min_mm,max_mm,n_points,pass_fraction
std::string report_to_csv(const EvaluationResult& result);
void save_report_csv(const EvaluationResult& result, const std::string& path);

}  // namespace timberdiff::io
