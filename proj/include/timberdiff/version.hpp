#pragma once

namespace timberdiff {

inline constexpr const char* kToolName = "timberdiff";
inline constexpr const char* kToolVersion = "0.1.0";

/// Version tag of the report.json schema emitted by the pipelines.
inline constexpr int kReportSchemaVersion = 1;

}  // namespace timberdiff
