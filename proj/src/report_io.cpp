#include "timberdiff/report_io.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <nlohmann/json.hpp>

#include "timberdiff/errors.hpp"
#include "timberdiff/version.hpp"

namespace timberdiff::io {

namespace {

using nlohmann::json;

json vec3_to_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

json transform_to_json_value(const RigidTransform& t) {
    json j;
    j["rotation"] = json::array();
    for (int r = 0; r < 3; ++r) {
        j["rotation"].push_back({t.rotation(r, 0), t.rotation(r, 1), t.rotation(r, 2)});
    }
    j["translation"] = vec3_to_json(t.translation);
    return j;
}

json stats_to_json(const DistanceStats& stats) {
    json j;
    j["n_points"] = stats.count;
    j["mean_m"] = stats.mean;
    j["mse_m2"] = stats.mse;
    j["std_m"] = stats.stddev;
    j["min_m"] = stats.min;
    j["max_m"] = stats.max;
    if (stats.threshold) {
        j["threshold_m"] = *stats.threshold;
        j["pass_fraction"] = stats.pass_fraction;
        j["categories"] = {{"pass", stats.n_pass}, {"warn", stats.n_warn}, {"fail", stats.n_fail}};
    }
    return j;
}

json entity_to_json(const EntityRef& entity) {
    json j;
    j["level"] = EntityRef::level_name(entity.level);
    if (entity.beam >= 0) j["beam"] = entity.beam;
    if (entity.joint >= 0) j["joint"] = entity.joint;
    if (entity.face >= 0) j["face"] = entity.face;
    j["label"] = entity.label();
    return j;
}

const char* backend_name(MetricBackend backend) {
    switch (backend) {
        case MetricBackend::Default: return "default";
        case MetricBackend::CloudToCloud: return "cloud";
        case MetricBackend::CloudToMesh: return "mesh";
    }
    return "?";
}

json config_to_json(const PipelineConfig& config) {
    json j;
    j["voxel_size_m"] = config.voxel_size;
    j["outliers"] = {{"enabled", config.outliers.enabled},
                     {"k_neighbors", config.outliers.k_neighbors},
                     {"std_ratio", config.outliers.std_ratio}};
    j["normals_k"] = config.normals_k;
    j["sample_density_per_m2"] = config.sample_density;
    j["segment_angle_threshold_deg"] = config.segment_angle_threshold_deg;
    j["segment_k_neighbors"] = config.segment_k_neighbors;
    j["min_segment_size"] = config.min_segment_size;
    j["max_centroid_distance_m"] = config.max_centroid_distance;
    j["max_normal_angle_deg"] = config.max_normal_angle_deg;
    j["association_lambda"] = config.association_lambda;
    j["projection_tolerance_m"] = config.projection_tolerance;
    j["backend"] = backend_name(config.backend);
    if (config.threshold) j["threshold_m"] = *config.threshold;
    j["seed"] = config.seed;
    j["registration"] = {
        {"skip_global", config.registration.skip_global},
        {"external_t1", config.registration.external_t1.has_value()},
        {"feature_radius_m", config.effective_feature_radius()},
        {"ransac",
         {{"max_iterations", config.registration.ransac.max_iterations},
          {"distance_threshold_m", config.effective_ransac_threshold()},
          {"edge_length_ratio", config.registration.ransac.edge_length_ratio},
          {"confidence", config.registration.ransac.confidence},
          {"fitness_floor", config.registration.ransac.fitness_floor},
          {"correspondence_pool", config.registration.ransac.correspondence_pool}}},
        {"icp",
         {{"max_iterations", config.registration.icp.max_iterations},
          {"max_correspondence_distance_m", config.effective_icp_cap()},
          {"rel_rmse_change", config.registration.icp.rel_rmse_change},
          {"rel_fitness_change", config.registration.icp.rel_fitness_change},
          {"point_to_plane", config.registration.icp.point_to_plane}}}};
    return j;
}

json registration_result_to_json(const RegistrationResult& r) {
    json j;
    j["transform"] = transform_to_json_value(r.transform);
    j["fitness"] = r.fitness;
    j["inlier_rmse_m"] = r.inlier_rmse;
    j["iterations"] = r.iterations;
    return j;
}

}  // namespace

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for hashing");

    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw Error("failed to initialize SHA-256");
    }
    char buffer[1 << 16];
    while (in) {
        in.read(buffer, sizeof(buffer));
        const std::streamsize got = in.gcount();
        if (got > 0) EVP_DigestUpdate(ctx, buffer, static_cast<std::size_t>(got));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    EVP_DigestFinal_ex(ctx, digest, &length);
    EVP_MD_CTX_free(ctx);

    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * length);
    for (unsigned int i = 0; i < length; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string report_to_json(const EvaluationResult& result, const PipelineConfig& config,
                           const Provenance& provenance, bool per_point) {
    json j;
    j["schema"] = kReportSchemaVersion;
    j["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
    if (!provenance.timestamp.empty()) j["timestamp"] = provenance.timestamp;

    json prov;
    prov["config"] = config_to_json(config);
    prov["stages"] = result.stages;
    prov["inputs"] = json::array();
    for (const auto& input : provenance.inputs) {
        prov["inputs"].push_back({{"path", input.path}, {"sha256", input.sha256}});
    }
    j["provenance"] = std::move(prov);

    j["t1"] = transform_to_json_value(result.t1);
    if (result.coarse) j["registration_coarse"] = registration_result_to_json(*result.coarse);
    j["registration_icp"] = registration_result_to_json(result.icp);

    if (!result.t2.empty()) {
        json t2 = json::object();
        for (const auto& [key, correction] : result.t2) {
            json jc;
            jc["transform"] = transform_to_json_value(correction.t2);
            jc["rmse_before_m"] = correction.rmse_before;
            jc["rmse_after_m"] = correction.rmse_after;
            jc["iterations"] = correction.iterations;
            t2["beam" + std::to_string(key.beam) + "/joint" + std::to_string(key.joint)] =
                std::move(jc);
        }
        j["t2"] = std::move(t2);
    }

    j["reports"] = json::array();
    for (const ErrorReport& report : result.reports) {
        json jr;
        jr["entity"] = entity_to_json(report.entity);
        jr.update(stats_to_json(report.stats));
        if (per_point) {
            jr["scan_indices"] = report.scan_indices;
            jr["per_point_m"] = report.per_point_distances;
        }
        j["reports"].push_back(std::move(jr));
    }

    j["across_members"] = {{"mean_of_means_m", result.mean_of_member_means},
                           {"std_of_means_m", result.std_of_member_means}};

    j["unassociated"] = json::array();
    for (const EntityRef& entity : result.unassociated) {
        j["unassociated"].push_back(entity_to_json(entity));
    }
    j["counts"] = {{"registered_scan_points", result.registered_scan.size()},
                   {"segments", result.segment_count},
                   {"residue_points", result.residue_points},
                   {"unassociated_segment_points", result.unassociated_segment_points},
                   {"multiply_used_segments", result.multiply_used_segments}};
    j["warnings"] = result.warnings;
    j["exit_code"] = result.exit_code();
    return j.dump(1);
}

void save_report_json(const EvaluationResult& result, const PipelineConfig& config,
                      const Provenance& provenance, bool per_point, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << report_to_json(result, config, provenance, per_point) << "\n";
    if (!out) throw IoError("write failure on '" + path + "'");
}

std::string report_to_csv(const EvaluationResult& result) {
    std::string csv = "entity,level,mean_mm,mse_mm2,std_mm,min_mm,max_mm,n_points,pass_fraction\n";
    char line[512];
    for (const ErrorReport& report : result.reports) {
        const DistanceStats& s = report.stats;
        // meters -> millimeters (mse -> mm^2)
        std::snprintf(line, sizeof(line), "%s,%s,%.6g,%.6g,%.6g,%.6g,%.6g,%zu,",
                      report.entity.label().c_str(), EntityRef::level_name(report.entity.level),
                      s.mean * 1e3, s.mse * 1e6, s.stddev * 1e3, s.min * 1e3, s.max * 1e3,
                      s.count);
        csv += line;
        if (s.threshold) {
            std::snprintf(line, sizeof(line), "%.6g", s.pass_fraction);
            csv += line;
        }
        csv += "\n";
    }
    return csv;
}

void save_report_csv(const EvaluationResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << report_to_csv(result);
    if (!out) throw IoError("write failure on '" + path + "'");
}

}  // namespace timberdiff::io
