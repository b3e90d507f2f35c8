#include "timberdiff/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "timberdiff/errors.hpp"
#include "timberdiff/mesh_sampling.hpp"
#include "timberdiff/preprocess.hpp"
#include "timberdiff/rng.hpp"
#include "timberdiff/transform.hpp"

namespace timberdiff {

void PipelineConfig::validate() const {
    if (voxel_size < 0.0) throw InvalidParameter("voxel_size must be >= 0");
    if (!(sample_density > 0.0)) throw InvalidParameter("sample_density must be > 0");
    if (!(projection_tolerance > 0.0)) throw InvalidParameter("projection_tolerance must be > 0");
    if (!(segment_angle_threshold_deg > 0.0)) {
        throw InvalidParameter("segment_angle_threshold_deg must be > 0");
    }
    if (max_centroid_distance < 0.0) throw InvalidParameter("max_centroid_distance must be >= 0");
    if (threshold && !(*threshold > 0.0)) throw InvalidParameter("threshold must be > 0");
    if (normals_k < 3) throw InvalidParameter("normals_k must be >= 3");
}

double PipelineConfig::effective_feature_radius() const {
    if (registration.feature_radius > 0.0) return registration.feature_radius;
    return voxel_size > 0.0 ? 5.0 * voxel_size : 0.01;
}

double PipelineConfig::effective_ransac_threshold() const {
    if (registration.ransac.distance_threshold > 0.0) return registration.ransac.distance_threshold;
    return voxel_size > 0.0 ? 1.5 * voxel_size : 0.003;
}

double PipelineConfig::effective_icp_cap() const {
    if (registration.icp.max_correspondence_distance > 0.0) {
        return registration.icp.max_correspondence_distance;
    }
    return voxel_size > 0.0 ? 5.0 * voxel_size : 0.01;
}

double default_max_centroid_distance(const Assembly& assembly) {
    std::vector<double> diagonals;
    for (const Beam& beam : assembly.beams) {
        const double d = beam.cross_section_diagonal();
        if (d > 0.0) diagonals.push_back(d);
    }
    if (diagonals.empty()) return 0.2;
    std::sort(diagonals.begin(), diagonals.end());
    return 2.0 * diagonals[diagonals.size() / 2];
}

namespace {

template <typename F>
auto run_stage(std::vector<std::string>& stages, const std::string& name, F&& f) {
    stages.push_back(name);
    try {
        return f();
    } catch (const RegistrationFailed&) {
        throw;
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(name, e.what());
    }
}

struct PreprocessedScan {
    PointCloud cloud;
};

PreprocessedScan preprocess_scan(const PointCloud& scan, const PipelineConfig& config,
                                 EvaluationResult& result) {
    PreprocessedScan out;
    out.cloud = scan;

    if (config.voxel_size > 0.0) {
        out.cloud = run_stage(result.stages, "downsample",
                              [&] { return voxel_downsample(out.cloud, config.voxel_size); });
    }
    if (config.outliers.enabled) {
        out.cloud = run_stage(result.stages, "outlier_removal", [&] {
            return remove_statistical_outliers(out.cloud, config.outliers.k_neighbors,
                                               config.outliers.std_ratio)
                .cloud;
        });
    }
    out.cloud = run_stage(result.stages, "normal_estimation",
                          [&] { return estimate_normals(out.cloud, config.normals_k); });
    return out;
}

struct TargetModel {
    std::vector<TargetFace> faces;  // every beam face, sampled
    PointCloud cloud;               // concatenation of all face clouds
    std::map<int, std::vector<std::size_t>> beam_faces;  // beam id -> indices into faces
};

TargetModel sample_target(const Assembly& assembly, const PipelineConfig& config,
                          bool joint_faces_only) {
    const Rng root(config.seed);
    TargetModel model;
    std::vector<PointCloud> parts;
    for (const Beam& beam : assembly.beams) {
        const Rng beam_rng = root.split("target").split(static_cast<std::uint64_t>(beam.id));
        model.beam_faces[beam.id];
        for (const MeshFace& face : beam.faces) {
            if (joint_faces_only && !face.is_joint_face()) continue;
            const std::uint64_t face_seed =
                beam_rng.split(static_cast<std::uint64_t>(face.id)).next();
            PointCloud sampled = sample_face(beam.vertices, face, config.sample_density, face_seed);
            FaceRef ref;
            ref.beam = beam.id;
            if (face.is_joint_face()) {
                ref.joint = face.joint_id;
                ref.face = face.joint_face_id;
            } else {
                ref.face = face.id;
            }
            model.beam_faces[beam.id].push_back(model.faces.size());
            parts.push_back(sampled);
            model.faces.push_back(make_target_face(ref, std::move(sampled)));
        }
    }
    model.cloud = concatenate(parts);
    return model;
}

/// T1 estimation: external transform or identity when the global step is
/// skipped (fiducial workflow), otherwise FPFH + RANSAC; ICP refinement on
/// top in all cases.
void register_scan(const PointCloud& scan_cloud, const TargetModel& target,
                   const PipelineConfig& config, EvaluationResult& result) {
    RigidTransform initial;
    if (config.registration.external_t1) {
        initial = *config.registration.external_t1;
        result.stages.push_back("global_registration(external)");
    } else if (config.registration.skip_global) {
        result.stages.push_back("global_registration(skipped)");
    } else {
        result.stages.push_back("global_registration");
        try {
            const double radius = config.effective_feature_radius();
            const FeatureSet scan_features = compute_fpfh(scan_cloud, radius);
            const FeatureSet target_features = compute_fpfh(target.cloud, radius);
            RansacParams params = config.registration.ransac;
            params.distance_threshold = config.effective_ransac_threshold();
            params.seed = Rng(config.seed).split("ransac").next();
            result.coarse =
                ransac_register(scan_cloud, target.cloud, scan_features, target_features, params);
            initial = result.coarse->transform;
        } catch (const Error& e) {
            throw RegistrationFailed(std::string("coarse registration failed: ") + e.what());
        }
    }

    result.stages.push_back("icp_refinement");
    try {
        IcpParams params = config.registration.icp;
        params.max_correspondence_distance = config.effective_icp_cap();
        result.icp = icp_refine(scan_cloud, target.cloud, initial, params);
        result.t1 = result.icp.transform;
    } catch (const Error& e) {
        std::string diagnostic = std::string("ICP refinement failed: ") + e.what();
        if (result.coarse) {
            diagnostic += "; coarse fitness " + std::to_string(result.coarse->fitness) +
                          ", rmse " + std::to_string(result.coarse->inlier_rmse);
        }
        throw RegistrationFailed(diagnostic);
    }
}

std::vector<double> face_metric_distances(const PointCloud& subset, const Beam& beam,
                                          const std::vector<MeshFace>& faces,
                                          const PointCloud& sampled, MetricBackend backend,
                                          bool prefer_mesh) {
    const bool use_mesh = backend == MetricBackend::CloudToMesh ||
                          (backend == MetricBackend::Default && prefer_mesh);
    if (use_mesh) return cloud_to_mesh_distances(subset, beam.vertices, faces);
    return cloud_to_cloud_distances(subset, sampled);
}

}  // namespace

RegistrationOutcome register_to_model(const PointCloud& scan, const Assembly& assembly,
                                      const PipelineConfig& config) {
    config.validate();
    assembly.validate();
    if (scan.empty()) throw InvalidParameter("scan is empty");

    EvaluationResult scratch;
    const PreprocessedScan preprocessed = preprocess_scan(scan, config, scratch);
    const TargetModel target = run_stage(scratch.stages, "target_sampling", [&] {
        return sample_target(assembly, config, /*joint_faces_only=*/false);
    });
    register_scan(preprocessed.cloud, target, config, scratch);

    RegistrationOutcome outcome;
    outcome.t1 = scratch.t1;
    outcome.coarse = scratch.coarse;
    outcome.icp = scratch.icp;
    outcome.preprocessed = preprocessed.cloud;
    outcome.stages = scratch.stages;
    return outcome;
}

EvaluationResult evaluate_assembly(const PointCloud& scan, const Assembly& assembly,
                                   const PipelineConfig& config) {
    config.validate();
    assembly.validate();
    if (scan.empty()) throw InvalidParameter("scan is empty");
    if (assembly.beams.empty()) throw InvalidParameter("assembly has no beams");

    EvaluationResult result;
    const PreprocessedScan preprocessed = preprocess_scan(scan, config, result);

    const TargetModel target = run_stage(result.stages, "target_sampling", [&] {
        return sample_target(assembly, config, /*joint_faces_only=*/false);
    });

    register_scan(preprocessed.cloud, target, config, result);
    result.registered_scan = result.t1.apply(preprocessed.cloud);

    const SegmentationResult segmentation = run_stage(result.stages, "segmentation", [&] {
        return segment_by_normals(result.registered_scan, config.segment_angle_threshold_deg,
                                  config.segment_k_neighbors, config.min_segment_size);
    });
    result.segment_count = segmentation.segments.size();
    result.residue_points = segmentation.residue.size();

    const double gate = config.max_centroid_distance > 0.0
                            ? config.max_centroid_distance
                            : default_max_centroid_distance(assembly);
    const auto associations = run_stage(result.stages, "face_association", [&] {
        return associate_segments(segmentation.segments, target.faces, gate,
                                  config.max_normal_angle_deg, config.association_lambda);
    });

    const BeamClusters clusters = run_stage(result.stages, "beam_clustering", [&] {
        return cluster_beams(associations, segmentation.segments, assembly,
                             result.registered_scan);
    });
    result.multiply_used_segments = clusters.multiply_used_segments;

    {
        std::vector<char> associated(segmentation.segments.size(), 0);
        for (const auto& assoc : associations) associated[assoc.segment] = 1;
        for (std::size_t s = 0; s < segmentation.segments.size(); ++s) {
            if (!associated[s]) {
                result.unassociated_segment_points += segmentation.segments[s].size();
            }
        }
    }

    run_stage(result.stages, "metrics", [&] {
        std::vector<double> pooled;
        std::vector<int> pooled_indices;
        std::vector<double> member_means;
        for (const Beam& beam : assembly.beams) {
            const auto& indices = clusters.indices.at(beam.id);
            if (indices.empty()) {
                result.unassociated.push_back(
                    {EntityRef::Level::Beam, beam.id, -1, -1});
                result.warnings.push_back("beam " + std::to_string(beam.id) +
                                          ": no associated scan segments");
                continue;
            }
            const PointCloud subset = result.registered_scan.select(indices);
            std::vector<PointCloud> face_clouds;
            for (const std::size_t f : target.beam_faces.at(beam.id)) {
                face_clouds.push_back(target.faces[f].cloud);
            }
            const std::vector<double> distances =
                face_metric_distances(subset, beam, beam.faces, concatenate(face_clouds),
                                      config.backend, /*prefer_mesh=*/false);
            pooled.insert(pooled.end(), distances.begin(), distances.end());
            pooled_indices.insert(pooled_indices.end(), indices.begin(), indices.end());
            member_means.push_back(summarize(distances).mean);
            result.reports.push_back(make_report({EntityRef::Level::Beam, beam.id, -1, -1},
                                                 indices, distances, config.threshold));
        }

        if (!pooled.empty()) {
            result.reports.insert(
                result.reports.begin(),
                make_report({EntityRef::Level::Assembly, -1, -1, -1}, std::move(pooled_indices),
                            std::move(pooled), config.threshold));
        }
        if (!member_means.empty()) {
            double mean = 0.0;
            for (const double m : member_means) mean += m;
            mean /= static_cast<double>(member_means.size());
            double var = 0.0;
            for (const double m : member_means) var += (m - mean) * (m - mean);
            result.mean_of_member_means = mean;
            result.std_of_member_means =
                std::sqrt(var / static_cast<double>(member_means.size()));
        }
        return 0;
    });

    return result;
}

EvaluationResult evaluate_joints(const PointCloud& scan, const Beam& beam,
                                 const PipelineConfig& config, JointLevel level) {
    config.validate();
    if (scan.empty()) throw InvalidParameter("scan is empty");
    if (beam.joints.empty()) throw InvalidParameter("beam has no joints to evaluate");

    Assembly assembly;
    assembly.name = "beam" + std::to_string(beam.id);
    assembly.beams.push_back(beam);
    assembly.validate();
    const Beam& model_beam = assembly.beams.front();

    EvaluationResult result;
    const PreprocessedScan preprocessed = preprocess_scan(scan, config, result);

    // Registration aligns against the whole beam; association and extraction
    // only concern the joint faces.
    const TargetModel full_target = run_stage(result.stages, "target_sampling", [&] {
        return sample_target(assembly, config, /*joint_faces_only=*/false);
    });
    register_scan(preprocessed.cloud, full_target, config, result);
    result.registered_scan = result.t1.apply(preprocessed.cloud);

    const SegmentationResult segmentation = run_stage(result.stages, "segmentation", [&] {
        return segment_by_normals(result.registered_scan, config.segment_angle_threshold_deg,
                                  config.segment_k_neighbors, config.min_segment_size);
    });
    result.segment_count = segmentation.segments.size();
    result.residue_points = segmentation.residue.size();

    std::vector<TargetFace> joint_faces;
    for (const TargetFace& face : full_target.faces) {
        if (face.ref.joint >= 0) joint_faces.push_back(face);
    }

    const double gate = config.max_centroid_distance > 0.0
                            ? config.max_centroid_distance
                            : default_max_centroid_distance(assembly);
    const auto associations = run_stage(result.stages, "face_association", [&] {
        return associate_segments(segmentation.segments, joint_faces, gate,
                                  config.max_normal_angle_deg, config.association_lambda);
    });

    {
        std::vector<char> associated(segmentation.segments.size(), 0);
        for (const auto& assoc : associations) associated[assoc.segment] = 1;
        for (std::size_t s = 0; s < segmentation.segments.size(); ++s) {
            if (!associated[s]) {
                result.unassociated_segment_points += segmentation.segments[s].size();
            }
        }
    }

    const auto extractions = run_stage(result.stages, "joint_extraction", [&] {
        return extract_joint_clouds(associations, segmentation.segments, assembly,
                                    result.registered_scan, config.projection_tolerance);
    });

    run_stage(result.stages,
              level == JointLevel::PerJoint ? std::string("metrics(per-joint)")
                                            : std::string("metrics(per-joint-face)"),
              [&] {
        for (const Joint& joint : model_beam.joints) {
            const JointExtraction& extraction = extractions.at({model_beam.id, joint.id});
            const EntityRef joint_ref{EntityRef::Level::Joint, model_beam.id, joint.id, -1};
            if (extraction.joint_indices.empty()) {
                result.unassociated.push_back(joint_ref);
                result.warnings.push_back("joint " + std::to_string(joint.id) +
                                          ": not detected in the scan");
                if (level == JointLevel::PerJointFace) {
                    for (const int f : joint.faces) {
                        result.unassociated.push_back({EntityRef::Level::Face, model_beam.id,
                                                       joint.id,
                                                       model_beam.faces[f].joint_face_id});
                    }
                }
                continue;
            }

            std::vector<MeshFace> faces;
            std::vector<PointCloud> sampled_parts;
            for (const int f : joint.faces) {
                faces.push_back(model_beam.faces[f]);
                for (const TargetFace& tf : joint_faces) {
                    if (tf.ref.joint == joint.id &&
                        tf.ref.face == model_beam.faces[f].joint_face_id) {
                        sampled_parts.push_back(tf.cloud);
                    }
                }
            }
            const PointCloud joint_target = concatenate(sampled_parts);
            const PointCloud joint_cloud = result.registered_scan.select(extraction.joint_indices);

            // Per-joint metrics: the extracted cloud against the CAD joint.
            result.reports.push_back(make_report(
                joint_ref, extraction.joint_indices,
                face_metric_distances(joint_cloud, model_beam, faces, joint_target, config.backend,
                                      /*prefer_mesh=*/true),
                config.threshold));

            if (level != JointLevel::PerJointFace) continue;

            // One T2 per joint: rigid ICP of the joint cloud onto the CAD
            // joint removes the placement offset; the same T2 applies to every
            // face of the joint.
            IcpParams icp_params = config.registration.icp;
            icp_params.max_correspondence_distance =
                std::max(config.effective_icp_cap(), 2.0 * config.projection_tolerance);
            JointCorrection correction;
            {
                IcpParams probe = icp_params;
                probe.max_iterations = 0;
                correction.rmse_before =
                    icp_refine(joint_cloud, joint_target, RigidTransform::identity(), probe)
                        .inlier_rmse;
            }
            const RegistrationResult t2 =
                icp_refine(joint_cloud, joint_target, RigidTransform::identity(), icp_params);
            correction.t2 = t2.transform;
            correction.rmse_after = t2.inlier_rmse;
            correction.iterations = t2.iterations;
            result.t2[{model_beam.id, joint.id}] = correction;

            for (const int f : joint.faces) {
                const MeshFace& face = model_beam.faces[f];
                const EntityRef face_ref{EntityRef::Level::Face, model_beam.id, joint.id,
                                         face.joint_face_id};
                const auto it = extraction.face_indices.find(face.joint_face_id);
                if (it == extraction.face_indices.end() || it->second.empty()) {
                    result.unassociated.push_back(face_ref);
                    result.warnings.push_back(face_ref.label() + ": no projectable scan points");
                    continue;
                }
                const PointCloud face_cloud =
                    correction.t2.apply(result.registered_scan.select(it->second));
                PointCloud face_sampled;
                for (const TargetFace& tf : joint_faces) {
                    if (tf.ref.joint == joint.id && tf.ref.face == face.joint_face_id) {
                        face_sampled = tf.cloud;
                    }
                }
                result.reports.push_back(make_report(
                    face_ref, it->second,
                    face_metric_distances(face_cloud, model_beam, {face}, face_sampled,
                                          config.backend, /*prefer_mesh=*/true),
                    config.threshold));
            }
        }
        return 0;
    });

    return result;
}

}  // namespace timberdiff
