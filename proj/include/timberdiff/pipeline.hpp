#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "timberdiff/assembly.hpp"
#include "timberdiff/errors.hpp"
#include "timberdiff/metrics.hpp"
#include "timberdiff/point_cloud.hpp"
#include "timberdiff/registration.hpp"
#include "timberdiff/segmentation.hpp"
#include "timberdiff/transform.hpp"

namespace timberdiff {

enum class MetricBackend {
    Default,       // cloud-to-mesh for faces/joints, cloud-to-cloud for beams
    CloudToCloud,
    CloudToMesh,
};

struct OutlierParams {
    bool enabled = true;
    int k_neighbors = 20;
    double std_ratio = 2.0;
};

struct GlobalRegistrationConfig {
    bool skip_global = false;  // identity initial alignment (fiducial workflow)
    std::optional<RigidTransform> external_t1;
    double feature_radius = 0.0;  // 0 -> 5x voxel
    RansacParams ransac;          // distance_threshold 0 -> 1.5x voxel
    IcpParams icp;                // max_correspondence_distance 0 -> 5x voxel
};

struct PipelineConfig {
    double voxel_size = 0.002;  // meters; 0 disables down-sampling
    OutlierParams outliers;
    int normals_k = 20;
    double sample_density = 1e6;  // CAD sub-sampling, points per m^2

    double segment_angle_threshold_deg = 15.0;
    int segment_k_neighbors = 20;
    int min_segment_size = 50;
    double max_centroid_distance = 0.0;  // 0 -> 2x median beam cross-section diagonal
    double max_normal_angle_deg = 30.0;
    double association_lambda = 1.0;

    double projection_tolerance = 0.005;  // meters

    MetricBackend backend = MetricBackend::Default;
    std::optional<double> threshold;  // meters, enables pass/warn/fail buckets
    ColorMap colormap;

    std::uint64_t seed = 0;
    GlobalRegistrationConfig registration;

    void validate() const;

    double effective_feature_radius() const;
    double effective_ransac_threshold() const;
    double effective_icp_cap() const;
};

/// Association gate default derived from the model geometry.
double default_max_centroid_distance(const Assembly& assembly);

enum class JointLevel { PerJoint, PerJointFace };

/// T2 bookkeeping for one joint of a subtractive run.
struct JointCorrection {
    RigidTransform t2;
    double rmse_before = 0.0;  // correspondence RMSE at identity
    double rmse_after = 0.0;   // after T2
    int iterations = 0;
};

struct EvaluationResult {
    RigidTransform t1;
    std::optional<RegistrationResult> coarse;  // absent when global step skipped
    RegistrationResult icp;

    PointCloud registered_scan;  // preprocessed scan in the CAD frame

    std::vector<ErrorReport> reports;
    std::vector<EntityRef> unassociated;

    // Assembly-level "±" is reported both ways: pooled per-point statistics
    // live in the assembly-level report; the across-member view is here.
    double mean_of_member_means = 0.0;
    double std_of_member_means = 0.0;

    std::size_t residue_points = 0;
    std::size_t unassociated_segment_points = 0;
    std::size_t segment_count = 0;
    std::vector<int> multiply_used_segments;

    std::map<JointKey, JointCorrection> t2;  // subtractive runs only

    std::vector<std::string> stages;  // executed stage order
    std::vector<std::string> warnings;

    /// 0 = full coverage, 1 = completed with unassociated entities.
    int exit_code() const { return unassociated.empty() ? 0 : 1; }
};

/// Wraps a stage failure with the stage name; registration failures become
/// RegistrationFailed instead (with coarse diagnostics in the message).
class StageError : public Error {
public:
    StageError(const std::string& stage, const std::string& what)
        : Error("[" + stage + "] " + what), stage_(stage) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

/// Registration only: preprocess the scan and estimate T1 against the
/// sampled model. Used by the `register` subcommand and internally by the
/// evaluation pipelines.
struct RegistrationOutcome {
    RigidTransform t1;
    std::optional<RegistrationResult> coarse;
    RegistrationResult icp;
    PointCloud preprocessed;  // scan after downsample/outliers/normals, before T1
    std::vector<std::string> stages;
};
RegistrationOutcome register_to_model(const PointCloud& scan, const Assembly& assembly,
                                      const PipelineConfig& config);

/// Assembly-level evaluation: preprocess, register (unless an external or
/// identity T1 is configured), segment, associate against all beam faces,
/// cluster to beams, per-beam metrics.
EvaluationResult evaluate_assembly(const PointCloud& scan, const Assembly& assembly,
                                   const PipelineConfig& config);

/// Joint-level evaluation of a single beam. PerJoint compares each extracted
/// joint cloud directly with the CAD joint. PerJointFace additionally fits one
/// T2 per joint and evaluates each face after applying it.
EvaluationResult evaluate_joints(const PointCloud& scan, const Beam& beam,
                                 const PipelineConfig& config, JointLevel level);

}  // namespace timberdiff
