#include "timberdiff/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <nlohmann/json.hpp>
#include <optional>

#include "timberdiff/assembly_io.hpp"
#include "timberdiff/cloud_io.hpp"
#include "timberdiff/errors.hpp"
#include "timberdiff/metrics.hpp"
#include "timberdiff/pipeline.hpp"
#include "timberdiff/preprocess.hpp"
#include "timberdiff/report_io.hpp"
#include "timberdiff/segmentation.hpp"
#include "timberdiff/version.hpp"

namespace timberdiff::cli {

namespace {

namespace fs = std::filesystem;

std::string timestamp_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Shared pipeline options. All lengths are taken in millimeters on the
/// command line and converted to meters here; files stay in meters.
struct PipelineOptions {
    double voxel_mm = 2.0;
    bool no_outliers = false;
    int outlier_k = 20;
    double outlier_std = 2.0;
    int normals_k = 20;
    double density = 1e6;
    std::uint64_t seed = 0;

    double feature_radius_mm = 0.0;
    int ransac_iters = 100000;
    double ransac_threshold_mm = 0.0;
    double ransac_confidence = 0.999;
    double fitness_floor = 0.1;
    int correspondence_pool = 2000;

    int icp_iters = 50;
    double icp_cap_mm = 0.0;
    bool point_to_plane = false;

    double angle_deg = 15.0;
    int seg_k = 20;
    int min_segment_size = 50;
    double max_centroid_mm = 0.0;
    double max_normal_angle_deg = 30.0;
    double lambda = 1.0;

    double proj_tol_mm = 5.0;
    std::string backend = "default";
    double threshold_mm = 0.0;

    std::string colormap_mode = "adaptive";
    double color_min_mm = 0.0;
    double color_max_mm = 0.0;

    std::string t1_path;
    bool skip_global = false;
};

void add_pipeline_options(CLI::App* app, PipelineOptions& opt) {
    app->add_option("--voxel-mm", opt.voxel_mm, "Down-sampling voxel size in mm (0 disables)")
        ->capture_default_str();
    app->add_flag("--no-outliers", opt.no_outliers, "Skip statistical outlier removal");
    app->add_option("--outlier-k", opt.outlier_k, "Outlier removal neighbor count")
        ->capture_default_str();
    app->add_option("--outlier-std", opt.outlier_std, "Outlier removal std-ratio")
        ->capture_default_str();
    app->add_option("--normals-k", opt.normals_k, "Normal estimation neighbor count")
        ->capture_default_str();
    app->add_option("--density", opt.density, "CAD sub-sampling density, points per m^2")
        ->capture_default_str();
    app->add_option("--seed", opt.seed, "Root RNG seed")->capture_default_str();

    app->add_option("--feature-radius-mm", opt.feature_radius_mm,
                    "FPFH radius in mm (0 = 5x voxel)");
    app->add_option("--ransac-iters", opt.ransac_iters, "RANSAC iteration cap")
        ->capture_default_str();
    app->add_option("--ransac-threshold-mm", opt.ransac_threshold_mm,
                    "RANSAC inlier threshold in mm (0 = 1.5x voxel)");
    app->add_option("--ransac-confidence", opt.ransac_confidence, "RANSAC early-exit confidence")
        ->capture_default_str();
    app->add_option("--fitness-floor", opt.fitness_floor,
                    "Minimum acceptable registration fitness")
        ->capture_default_str();
    app->add_option("--correspondence-pool", opt.correspondence_pool,
                    "Feature correspondence pool size")
        ->capture_default_str();

    app->add_option("--icp-iters", opt.icp_iters, "ICP iteration cap")->capture_default_str();
    app->add_option("--icp-cap-mm", opt.icp_cap_mm,
                    "ICP correspondence distance cap in mm (0 = 5x voxel)");
    app->add_flag("--point-to-plane", opt.point_to_plane, "Use point-to-plane ICP");

    app->add_option("--angle-deg", opt.angle_deg, "Segmentation normal angle threshold, degrees")
        ->capture_default_str();
    app->add_option("--seg-k", opt.seg_k, "Segmentation neighbor count")->capture_default_str();
    app->add_option("--min-segment-size", opt.min_segment_size, "Minimum segment size")
        ->capture_default_str();
    app->add_option("--max-centroid-mm", opt.max_centroid_mm,
                    "Association centroid gate in mm (0 = from model size)");
    app->add_option("--max-normal-angle-deg", opt.max_normal_angle_deg,
                    "Association normal angle gate, degrees")
        ->capture_default_str();
    app->add_option("--lambda", opt.lambda, "Association normal-misalignment weight")
        ->capture_default_str();

    app->add_option("--proj-tol-mm", opt.proj_tol_mm, "Joint projection tolerance in mm")
        ->capture_default_str();
    app->add_option("--backend", opt.backend, "Metric backend: default|cloud|mesh")
        ->check(CLI::IsMember({"default", "cloud", "mesh"}))
        ->capture_default_str();
    app->add_option("--threshold-mm", opt.threshold_mm,
                    "Pass/warn/fail threshold in mm (0 = no categorization)");

    app->add_option("--colormap", opt.colormap_mode, "Heatmap mode: adaptive|fixed")
        ->check(CLI::IsMember({"adaptive", "fixed"}))
        ->capture_default_str();
    app->add_option("--color-min-mm", opt.color_min_mm, "Fixed colormap lower bound, mm");
    app->add_option("--color-max-mm", opt.color_max_mm, "Fixed colormap upper bound, mm");

    app->add_option("--t1", opt.t1_path, "External T1 transform JSON (skips RANSAC)");
    app->add_flag("--skip-global", opt.skip_global,
                  "Skip global registration, start ICP from identity");
}

PipelineConfig build_config(const PipelineOptions& opt) {
    PipelineConfig config;
    config.voxel_size = opt.voxel_mm * 1e-3;
    config.outliers.enabled = !opt.no_outliers;
    config.outliers.k_neighbors = opt.outlier_k;
    config.outliers.std_ratio = opt.outlier_std;
    config.normals_k = opt.normals_k;
    config.sample_density = opt.density;
    config.seed = opt.seed;

    config.registration.feature_radius = opt.feature_radius_mm * 1e-3;
    config.registration.ransac.max_iterations = opt.ransac_iters;
    config.registration.ransac.distance_threshold = opt.ransac_threshold_mm * 1e-3;
    config.registration.ransac.confidence = opt.ransac_confidence;
    config.registration.ransac.fitness_floor = opt.fitness_floor;
    config.registration.ransac.correspondence_pool = opt.correspondence_pool;
    config.registration.icp.max_iterations = opt.icp_iters;
    config.registration.icp.max_correspondence_distance = opt.icp_cap_mm * 1e-3;
    config.registration.icp.point_to_plane = opt.point_to_plane;
    config.registration.skip_global = opt.skip_global;
    if (!opt.t1_path.empty()) {
        config.registration.external_t1 = io::load_transform(opt.t1_path);
    }

    config.segment_angle_threshold_deg = opt.angle_deg;
    config.segment_k_neighbors = opt.seg_k;
    config.min_segment_size = opt.min_segment_size;
    config.max_centroid_distance = opt.max_centroid_mm * 1e-3;
    config.max_normal_angle_deg = opt.max_normal_angle_deg;
    config.association_lambda = opt.lambda;
    config.projection_tolerance = opt.proj_tol_mm * 1e-3;

    if (opt.backend == "cloud") config.backend = MetricBackend::CloudToCloud;
    else if (opt.backend == "mesh") config.backend = MetricBackend::CloudToMesh;
    if (opt.threshold_mm > 0.0) config.threshold = opt.threshold_mm * 1e-3;

    if (opt.colormap_mode == "fixed") {
        config.colormap = ColorMap::fixed(opt.color_min_mm * 1e-3, opt.color_max_mm * 1e-3);
    }
    return config;
}

io::Provenance make_provenance(const std::vector<std::string>& inputs) {
    io::Provenance provenance;
    provenance.timestamp = timestamp_now();
    for (const std::string& path : inputs) {
        provenance.inputs.push_back({path, io::sha256_file(path)});
    }
    return provenance;
}

/// Registered scan colored by per-point distance of the per-entity reports;
/// uncovered points (residue, unassociated) stay gray.
void write_colored_cloud(const EvaluationResult& result, const PipelineConfig& config,
                         EntityRef::Level level, const std::string& path) {
    const std::size_t n = result.registered_scan.size();
    std::vector<double> distance(n, std::numeric_limits<double>::quiet_NaN());
    for (const ErrorReport& report : result.reports) {
        if (report.entity.level != level) continue;
        for (std::size_t i = 0; i < report.scan_indices.size(); ++i) {
            distance[report.scan_indices[i]] = report.per_point_distances[i];
        }
    }

    std::vector<int> covered;
    std::vector<double> covered_distances;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isnan(distance[i])) {
            covered.push_back(static_cast<int>(i));
            covered_distances.push_back(distance[i]);
        }
    }

    PointCloud colored = result.registered_scan;
    colored.colors.assign(n, Vec3(0.5, 0.5, 0.5));
    if (!covered.empty()) {
        const ColorizeResult sub =
            colorize(result.registered_scan.select(covered), covered_distances, config.colormap);
        for (std::size_t k = 0; k < covered.size(); ++k) {
            colored.colors[covered[k]] = sub.cloud.colors[k];
        }
    }
    io::save_cloud(colored, path, io::CloudFormat::Ply);
}

void write_outputs(const EvaluationResult& result, const PipelineConfig& config,
                   const io::Provenance& provenance, bool per_point, EntityRef::Level color_level,
                   const std::string& out_dir) {
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    io::save_report_json(result, config, provenance, per_point, (dir / "report.json").string());
    io::save_report_csv(result, (dir / "report.csv").string());
    io::save_transform(result.t1, (dir / "t1.json").string());
    write_colored_cloud(result, config, color_level, (dir / "colored.ply").string());
}

void print_summary(const EvaluationResult& result) {
    for (const ErrorReport& report : result.reports) {
        const DistanceStats& s = report.stats;
        std::printf("%-28s n=%-8zu mean=%.3f mm  std=%.3f mm  min=%.3f  max=%.3f\n",
                    report.entity.label().c_str(), s.count, s.mean * 1e3, s.stddev * 1e3,
                    s.min * 1e3, s.max * 1e3);
    }
    for (const EntityRef& entity : result.unassociated) {
        std::printf("%-28s UNASSOCIATED\n", entity.label().c_str());
    }
    for (const std::string& warning : result.warnings) {
        std::fprintf(stderr, "warning: %s\n", warning.c_str());
    }
}

// ----------------------------------------------------------- subcommands ---

int cmd_convert(const std::string& in, const std::string& out, const std::string& out_format) {
    const PointCloud cloud = io::load_cloud(in);
    io::CloudFormat format;
    if (out_format == "ply") format = io::CloudFormat::Ply;
    else if (out_format == "ply-ascii") format = io::CloudFormat::PlyAscii;
    else if (out_format == "xyz") format = io::CloudFormat::Xyz;
    else format = io::format_from_path(out);
    for (const std::string& w : io::save_cloud(cloud, out, format)) {
        std::fprintf(stderr, "warning: %s\n", w.c_str());
    }
    return 0;
}

int cmd_preprocess(const std::string& in, const std::string& out, const PipelineOptions& opt,
                   const std::optional<Vec3>& hint) {
    PointCloud cloud = io::load_cloud(in);
    if (opt.voxel_mm > 0.0) cloud = voxel_downsample(cloud, opt.voxel_mm * 1e-3);
    if (!opt.no_outliers) {
        const auto removal = remove_statistical_outliers(cloud, opt.outlier_k, opt.outlier_std);
        std::fprintf(stderr, "outlier removal: %zu points removed\n",
                     removal.removed_indices.size());
        cloud = removal.cloud;
    }
    cloud = estimate_normals(cloud, opt.normals_k, hint);
    for (const std::string& w : io::save_cloud(cloud, out)) {
        std::fprintf(stderr, "warning: %s\n", w.c_str());
    }
    std::printf("%zu points written to %s\n", cloud.size(), out.c_str());
    return 0;
}

int cmd_register(const std::string& scan_path, const std::string& model_path,
                 const std::string& out, const PipelineOptions& opt) {
    const PointCloud scan = io::load_cloud(scan_path);
    const Assembly assembly = io::load_assembly(model_path);
    const PipelineConfig config = build_config(opt);
    const RegistrationOutcome outcome = register_to_model(scan, assembly, config);
    io::save_transform(outcome.t1, out);
    std::printf("t1 written to %s (fitness %.4f, inlier rmse %.4f mm, %d icp iterations)\n",
                out.c_str(), outcome.icp.fitness, outcome.icp.inlier_rmse * 1e3,
                outcome.icp.iterations);
    return 0;
}

int cmd_segment(const std::string& in, const std::string& out, const PipelineOptions& opt) {
    PointCloud cloud = io::load_cloud(in);
    if (!cloud.has_normals()) cloud = estimate_normals(cloud, opt.normals_k);
    const SegmentationResult segmentation =
        segment_by_normals(cloud, opt.angle_deg, opt.seg_k, opt.min_segment_size);
    std::ofstream file(out);
    if (!file) throw IoError("cannot open '" + out + "' for writing");
    file << segments_to_json(segmentation) << "\n";
    std::printf("%zu segments, %zu residue points\n", segmentation.segments.size(),
                segmentation.residue.size());
    return 0;
}

int cmd_eval_assembly(const std::string& scan_path, const std::string& model_path,
                      const std::string& out_dir, const PipelineOptions& opt, bool per_point) {
    const PointCloud scan = io::load_cloud(scan_path);
    const Assembly assembly = io::load_assembly(model_path);
    const PipelineConfig config = build_config(opt);
    const EvaluationResult result = evaluate_assembly(scan, assembly, config);
    write_outputs(result, config, make_provenance({scan_path, model_path}), per_point,
                  EntityRef::Level::Beam, out_dir);
    print_summary(result);
    return result.exit_code();
}

int cmd_eval_joints(const std::string& scan_path, const std::string& model_path, int beam_id,
                    const std::string& level_name, const std::string& out_dir,
                    const PipelineOptions& opt, bool per_point) {
    const PointCloud scan = io::load_cloud(scan_path);
    const Assembly assembly = io::load_assembly(model_path);

    const Beam* beam = nullptr;
    if (beam_id >= 0) {
        beam = assembly.find_beam(beam_id);
        if (beam == nullptr) {
            throw InvalidParameter("model has no beam " + std::to_string(beam_id));
        }
    } else if (assembly.beams.size() == 1) {
        beam = &assembly.beams.front();
    } else {
        throw InvalidParameter("model has several beams; pick one with --beam");
    }

    const JointLevel level =
        level_name == "per-joint" ? JointLevel::PerJoint : JointLevel::PerJointFace;
    const PipelineConfig config = build_config(opt);
    const EvaluationResult result = evaluate_joints(scan, *beam, config, level);
    write_outputs(result, config, make_provenance({scan_path, model_path}), per_point,
                  level == JointLevel::PerJoint ? EntityRef::Level::Joint : EntityRef::Level::Face,
                  out_dir);
    print_summary(result);
    return result.exit_code();
}

int cmd_colorize(const std::string& scan_path, const std::string& target_path,
                 const std::string& out, const PipelineOptions& opt) {
    const PointCloud scan = io::load_cloud(scan_path);

    std::vector<double> distances;
    const std::string ext = fs::path(target_path).extension().string();
    if (ext == ".obj" || ext == ".json") {
        const Assembly assembly = io::load_assembly(target_path);
        std::vector<double> best(scan.size(), std::numeric_limits<double>::infinity());
        for (const Beam& beam : assembly.beams) {
            const MeshDistanceIndex index(beam.vertices, beam.faces);
            const auto d = cloud_to_mesh_distances(scan, index);
            for (std::size_t i = 0; i < d.size(); ++i) best[i] = std::min(best[i], d[i]);
        }
        distances = std::move(best);
    } else {
        distances = cloud_to_cloud_distances(scan, io::load_cloud(target_path));
    }

    ColorMap map;
    if (opt.colormap_mode == "fixed") {
        map = ColorMap::fixed(opt.color_min_mm * 1e-3, opt.color_max_mm * 1e-3);
    }
    const ColorizeResult result = colorize(scan, distances, map);
    if (result.clamped > 0) {
        std::fprintf(stderr, "warning: %zu distances clamped to the fixed range\n",
                     result.clamped);
    }
    io::save_cloud(result.cloud, out, io::CloudFormat::Ply);
    std::printf("heatmap range [%.3f, %.3f] mm written to %s\n", result.used_min * 1e3,
                result.used_max * 1e3, out.c_str());
    return 0;
}

int cmd_report(const std::string& in, const std::string& csv_out) {
    std::ifstream file(in);
    if (!file) throw IoError("cannot open '" + in + "' for reading");
    nlohmann::json j;
    try {
        file >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid report JSON: ") + e.what());
    }

    std::printf("entity,level,mean_mm,mse_mm2,std_mm,min_mm,max_mm,n_points,pass_fraction\n");
    std::string csv = "entity,level,mean_mm,mse_mm2,std_mm,min_mm,max_mm,n_points,pass_fraction\n";
    for (const auto& jr : j.at("reports")) {
        double mean = jr.at("mean_m").get<double>();
        double mse = jr.at("mse_m2").get<double>();
        double stddev = jr.at("std_m").get<double>();
        double lo = jr.at("min_m").get<double>();
        double hi = jr.at("max_m").get<double>();
        auto n = jr.at("n_points").get<std::size_t>();

        if (jr.contains("per_point_m")) {
            // Stored per-point distances are authoritative; re-derive.
            const auto distances = jr.at("per_point_m").get<std::vector<double>>();
            std::optional<double> threshold;
            if (jr.contains("threshold_m")) threshold = jr.at("threshold_m").get<double>();
            const DistanceStats s = summarize(distances, threshold);
            if (std::abs(s.mean - mean) > 1e-9) {
                std::fprintf(stderr, "warning: %s: stored mean %.9g differs from recomputed %.9g\n",
                             jr.at("entity").at("label").get<std::string>().c_str(), mean, s.mean);
            }
            mean = s.mean;
            mse = s.mse;
            stddev = s.stddev;
            lo = s.min;
            hi = s.max;
            n = s.count;
        }

        char line[512];
        std::snprintf(line, sizeof(line), "%s,%s,%.6g,%.6g,%.6g,%.6g,%.6g,%zu,",
                      jr.at("entity").at("label").get<std::string>().c_str(),
                      jr.at("entity").at("level").get<std::string>().c_str(), mean * 1e3,
                      mse * 1e6, stddev * 1e3, lo * 1e3, hi * 1e3, n);
        csv += line;
        std::printf("%s", line);
        if (jr.contains("pass_fraction")) {
            std::snprintf(line, sizeof(line), "%.6g", jr.at("pass_fraction").get<double>());
            csv += line;
            std::printf("%s", line);
        }
        csv += "\n";
        std::printf("\n");
    }
    if (!csv_out.empty()) {
        std::ofstream out(csv_out);
        if (!out) throw IoError("cannot open '" + csv_out + "' for writing");
        out << csv;
    }
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{std::string(kToolName) + " " + kToolVersion +
                 " - scan vs CAD deviation analysis for timber assemblies and joints"};
    app.require_subcommand(1);

    // convert
    std::string conv_in, conv_out, conv_format;
    auto* convert = app.add_subcommand("convert", "Convert a point cloud between formats");
    convert->add_option("--in", conv_in, "Input cloud (.ply/.xyz)")->required();
    convert->add_option("--out", conv_out, "Output cloud")->required();
    convert->add_option("--format", conv_format, "Output format: ply|ply-ascii|xyz");

    // preprocess
    PipelineOptions pre_opt;
    std::string pre_in, pre_out;
    std::vector<double> pre_hint;
    auto* preprocess =
        app.add_subcommand("preprocess", "Down-sample, remove outliers, estimate normals");
    preprocess->add_option("--in", pre_in, "Input cloud")->required();
    preprocess->add_option("--out", pre_out, "Output cloud")->required();
    preprocess->add_option("--orient-toward", pre_hint,
                           "Normal orientation hint point (x y z, meters)")
        ->expected(3);
    add_pipeline_options(preprocess, pre_opt);

    // register
    PipelineOptions reg_opt;
    std::string reg_scan, reg_model, reg_out;
    auto* register_cmd = app.add_subcommand("register", "Estimate T1 and write it as JSON");
    register_cmd->add_option("--scan", reg_scan, "Scan cloud")->required();
    register_cmd->add_option("--model", reg_model, "CAD model (.obj/.json)")->required();
    register_cmd->add_option("--out", reg_out, "Output transform JSON")->required();
    add_pipeline_options(register_cmd, reg_opt);

    // segment
    PipelineOptions seg_opt;
    std::string seg_in, seg_out;
    auto* segment = app.add_subcommand("segment", "Normal-based segmentation debug dump");
    segment->add_option("--in", seg_in, "Input cloud")->required();
    segment->add_option("--out", seg_out, "Output segments JSON")->required();
    add_pipeline_options(segment, seg_opt);

    // eval-assembly
    PipelineOptions ea_opt;
    std::string ea_scan, ea_model, ea_out;
    bool ea_per_point = false;
    auto* eval_assembly =
        app.add_subcommand("eval-assembly", "Assembly evaluation: per-beam deviation reports");
    eval_assembly->add_option("--scan", ea_scan, "Scan cloud")->required();
    eval_assembly->add_option("--model", ea_model, "CAD model (.obj/.json)")->required();
    eval_assembly->add_option("--out", ea_out, "Output directory")->required();
    eval_assembly->add_flag("--per-point", ea_per_point,
                            "Include per-point distances in report.json");
    add_pipeline_options(eval_assembly, ea_opt);

    // eval-joints
    PipelineOptions ej_opt;
    std::string ej_scan, ej_model, ej_out, ej_level = "per-joint";
    int ej_beam = -1;
    bool ej_per_point = false;
    auto* eval_joints =
        app.add_subcommand("eval-joints", "Joint evaluation: per-joint / per-joint-face reports");
    eval_joints->add_option("--scan", ej_scan, "Scan cloud")->required();
    eval_joints->add_option("--model", ej_model, "CAD model (.obj/.json)")->required();
    eval_joints->add_option("--out", ej_out, "Output directory")->required();
    eval_joints->add_option("--beam", ej_beam, "Beam id (required for multi-beam models)");
    eval_joints->add_option("--level", ej_level, "per-joint or per-joint-face")
        ->check(CLI::IsMember({"per-joint", "per-joint-face"}))
        ->capture_default_str();
    eval_joints->add_flag("--per-point", ej_per_point,
                          "Include per-point distances in report.json");
    add_pipeline_options(eval_joints, ej_opt);

    // colorize
    PipelineOptions col_opt;
    std::string col_scan, col_target, col_out;
    auto* colorize_cmd =
        app.add_subcommand("colorize", "Color a cloud by distance to a target cloud or model");
    colorize_cmd->add_option("--scan", col_scan, "Cloud to color")->required();
    colorize_cmd->add_option("--target", col_target, "Target cloud (.ply/.xyz) or model (.obj/.json)")
        ->required();
    colorize_cmd->add_option("--out", col_out, "Output colored PLY")->required();
    add_pipeline_options(colorize_cmd, col_opt);

    // report
    std::string rep_in, rep_csv;
    auto* report = app.add_subcommand("report", "Re-summarize a stored report.json");
    report->add_option("--in", rep_in, "Input report.json")->required();
    report->add_option("--csv", rep_csv, "Also write the summary CSV here");

    std::vector<std::string> argv_strings = args;
    argv_strings.insert(argv_strings.begin(), kToolName);
    std::vector<const char*> argv;
    argv.reserve(argv_strings.size());
    for (const std::string& s : argv_strings) argv.push_back(s.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {  // --help and friends
            return app.exit(e);
        }
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (convert->parsed()) return cmd_convert(conv_in, conv_out, conv_format);
        if (preprocess->parsed()) {
            std::optional<Vec3> hint;
            if (pre_hint.size() == 3) hint = Vec3(pre_hint[0], pre_hint[1], pre_hint[2]);
            return cmd_preprocess(pre_in, pre_out, pre_opt, hint);
        }
        if (register_cmd->parsed()) return cmd_register(reg_scan, reg_model, reg_out, reg_opt);
        if (segment->parsed()) return cmd_segment(seg_in, seg_out, seg_opt);
        if (eval_assembly->parsed()) {
            return cmd_eval_assembly(ea_scan, ea_model, ea_out, ea_opt, ea_per_point);
        }
        if (eval_joints->parsed()) {
            return cmd_eval_joints(ej_scan, ej_model, ej_beam, ej_level, ej_out, ej_opt,
                                   ej_per_point);
        }
        if (colorize_cmd->parsed()) return cmd_colorize(col_scan, col_target, col_out, col_opt);
        if (report->parsed()) return cmd_report(rep_in, rep_csv);
    } catch (const RegistrationFailed& e) {
        std::cerr << "registration failed: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

}  // namespace timberdiff::cli
