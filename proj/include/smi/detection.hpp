#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "smi/dataset.hpp"
#include "smi/kernels.hpp"

namespace smi {

enum class BoxSetKind { ground_truth, proposal };

// Per-image object features: T ground-truth boxes for labeled images or R
// region proposals for unlabeled ones.
struct ObjectFeatureSet {
  PointId image_id = 0;
  RowMatrix boxes;  // one feature vector per box
  BoxSetKind kind = BoxSetKind::proposal;
  std::vector<std::uint32_t> box_classes;  // ground truth only, one per box

  std::size_t box_count() const noexcept { return static_cast<std::size_t>(boxes.rows()); }
  // Ground-truth boxes whose class satisfies `keep`; may be empty.
  template <class Pred>
  ObjectFeatureSet select_boxes(Pred keep) const {
    ObjectFeatureSet out{image_id, RowMatrix(0, boxes.cols()), kind, {}};
    std::vector<Eigen::Index> rows;
    for (std::size_t b = 0; b < box_classes.size(); ++b) {
      if (keep(box_classes[b])) rows.push_back(static_cast<Eigen::Index>(b));
    }
    out.boxes.resize(static_cast<Eigen::Index>(rows.size()), boxes.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out.boxes.row(static_cast<Eigen::Index>(r)) = boxes.row(rows[r]);
      out.box_classes.push_back(box_classes[static_cast<std::size_t>(rows[r])]);
    }
    return out;
  }
};

enum class DetectionMode {
  query,         // best matching GT-proposal pair: max over the score map
  conditioning,  // worst matched GT box: min over GT rows of the row max
};

// T x R map of rectified cosines between GT boxes and proposals.
Eigen::MatrixXd score_map(const ObjectFeatureSet& gt, const ObjectFeatureSet& proposals, Rectify policy);
double reduce_score_map(const Eigen::MatrixXd& scores, DetectionMode mode);

// Requires gt.kind == ground_truth and proposals.kind == proposal (argument
// error), a shared dimension (shape error) and non-empty box lists (data error).
double detection_similarity(const ObjectFeatureSet& gt, const ObjectFeatureSet& proposals, DetectionMode mode,
                            Rectify policy);

// One row per GT image, one column per unlabeled image; parallel over pairs.
Kernel detection_kernel(std::span<const ObjectFeatureSet> gt_images, std::span<const ObjectFeatureSet> unlabeled,
                        DetectionMode mode, Rectify policy);

namespace serial {
Kernel detection_kernel(std::span<const ObjectFeatureSet> gt_images, std::span<const ObjectFeatureSet> unlabeled,
                        DetectionMode mode, Rectify policy);
}

// Image-to-image similarity between two proposal sets (ground kernel for
// detection): query-mode reduction of the proposal x proposal score map.
Kernel proposal_ground_kernel(std::span<const ObjectFeatureSet> images, Rectify policy);

enum class Pool { labeled, unlabeled };

struct DetectionImage {
  PointId image_id = 0;
  std::optional<ObjectFeatureSet> ground_truth;
  std::optional<ObjectFeatureSet> proposals;
  std::optional<Pool> pool;
};

struct DetectionCorpus {
  std::map<PointId, DetectionImage> images;
  std::size_t dim = 0;

  const DetectionImage& image(PointId id) const;
};

// Manifest CSV `image_id,path,kind,box_classes[,pool]`: kind is
// ground_truth|proposal, box_classes is `c0;c1;...` (one per file row, GT
// only), pool is labeled|unlabeled. Feature files use the raw-f32 format with
// one box per row; relative paths resolve against the manifest directory.
DetectionCorpus load_detection_manifest(const std::filesystem::path& manifest);

}  // namespace smi
