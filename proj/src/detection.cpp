#include "smi/detection.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <string>

#include "smi/error.hpp"

namespace smi {

namespace {

void check_boxes(const ObjectFeatureSet& s) {
  if (s.boxes.rows() == 0) {
    throw Error(ErrorKind::data, "image " + std::to_string(s.image_id) + " has an empty box list");
  }
}

RowMatrix unit_rows(const RowMatrix& m, PointId image) {
  RowMatrix out = m;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double n = out.row(i).norm();
    if (!(n > 0.0)) {
      throw Error(ErrorKind::data, "zero-norm box " + std::to_string(i) + " in image " + std::to_string(image));
    }
    out.row(i) /= n;
  }
  return out;
}

Eigen::MatrixXd scores_of(const RowMatrix& a, const RowMatrix& b, Rectify policy) {
  Eigen::MatrixXd x = a * b.transpose();
  return x.unaryExpr([policy](double c) { return rectify(c, policy); });
}

double reduce(const RowMatrix& a, const RowMatrix& b, DetectionMode mode, Rectify policy) {
  return reduce_score_map(scores_of(a, b, policy), mode);
}

void check_pair(const ObjectFeatureSet& gt, const ObjectFeatureSet& proposals) {
  if (gt.kind != BoxSetKind::ground_truth || proposals.kind != BoxSetKind::proposal) {
    throw Error(ErrorKind::argument, "detection similarity pairs ground-truth boxes with proposals");
  }
  check_boxes(gt);
  check_boxes(proposals);
  if (gt.boxes.cols() != proposals.boxes.cols()) {
    throw Error(ErrorKind::shape, "box feature dimensions differ: " + std::to_string(gt.boxes.cols()) + " vs " +
                                      std::to_string(proposals.boxes.cols()));
  }
}

std::vector<RowMatrix> normalized_sets(std::span<const ObjectFeatureSet> sets) {
  std::vector<RowMatrix> out;
  out.reserve(sets.size());
  for (const auto& s : sets) out.push_back(unit_rows(s.boxes, s.image_id));
  return out;
}

Kernel empty_kernel(std::span<const ObjectFeatureSet> rows, std::span<const ObjectFeatureSet> cols) {
  Kernel k;
  for (const auto& s : rows) k.row_ids.push_back(s.image_id);
  for (const auto& s : cols) k.col_ids.push_back(s.image_id);
  k.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  return k;
}

}  // namespace

Eigen::MatrixXd score_map(const ObjectFeatureSet& gt, const ObjectFeatureSet& proposals, Rectify policy) {
  check_pair(gt, proposals);
  return scores_of(unit_rows(gt.boxes, gt.image_id), unit_rows(proposals.boxes, proposals.image_id), policy);
}

double reduce_score_map(const Eigen::MatrixXd& scores, DetectionMode mode) {
  if (scores.size() == 0) throw Error(ErrorKind::data, "empty score map");
  if (mode == DetectionMode::query) return scores.maxCoeff();
  return scores.rowwise().maxCoeff().minCoeff();
}

double detection_similarity(const ObjectFeatureSet& gt, const ObjectFeatureSet& proposals, DetectionMode mode,
                            Rectify policy) {
  return reduce_score_map(score_map(gt, proposals, policy), mode);
}

Kernel detection_kernel(std::span<const ObjectFeatureSet> gt_images, std::span<const ObjectFeatureSet> unlabeled,
                        DetectionMode mode, Rectify policy) {
  for (const auto& g : gt_images) {
    for (const auto& u : unlabeled) check_pair(g, u);
  }
  Kernel k = empty_kernel(gt_images, unlabeled);
  const auto a = normalized_sets(gt_images);
  const auto b = normalized_sets(unlabeled);
  const auto m = static_cast<Eigen::Index>(a.size());
  const auto n = static_cast<Eigen::Index>(b.size());
#pragma omp parallel for collapse(2) schedule(dynamic, 16)
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) {
      k.values(i, j) = reduce(a[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(j)], mode, policy);
    }
  }
  return k;
}

namespace serial {

Kernel detection_kernel(std::span<const ObjectFeatureSet> gt_images, std::span<const ObjectFeatureSet> unlabeled,
                        DetectionMode mode, Rectify policy) {
  Kernel k = empty_kernel(gt_images, unlabeled);
  for (std::size_t i = 0; i < gt_images.size(); ++i) {
    for (std::size_t j = 0; j < unlabeled.size(); ++j) {
      k.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          smi::detection_similarity(gt_images[i], unlabeled[j], mode, policy);
    }
  }
  return k;
}

}  // namespace serial

Kernel proposal_ground_kernel(std::span<const ObjectFeatureSet> images, Rectify policy) {
  for (const auto& s : images) {
    check_boxes(s);
    if (s.boxes.cols() != images.front().boxes.cols()) throw Error(ErrorKind::shape, "box feature dimensions differ");
  }
  Kernel k = empty_kernel(images, images);
  k.symmetric = true;
  const auto a = normalized_sets(images);
  const auto n = static_cast<Eigen::Index>(a.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      const double v = reduce(a[static_cast<std::size_t>(i)], a[static_cast<std::size_t>(j)], DetectionMode::query, policy);
      k.values(i, j) = v;
      k.values(j, i) = v;
    }
  }
  return k;
}

const DetectionImage& DetectionCorpus::image(PointId id) const {
  auto it = images.find(id);
  if (it == images.end()) throw Error(ErrorKind::lookup, "image " + std::to_string(id) + " not in detection corpus");
  return it->second;
}

DetectionCorpus load_detection_manifest(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw Error(ErrorKind::data, "cannot open " + manifest.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::data, manifest.string() + " is empty");
  const auto header = csv::split(line);
  if (header.size() < 4 || header[0] != "image_id" || header[1] != "path" || header[2] != "kind" ||
      header[3] != "box_classes") {
    throw Error(ErrorKind::format, manifest.string() + ": header must be image_id,path,kind,box_classes[,pool]");
  }
  const bool has_pool = header.size() >= 5 && header[4] == "pool";
  DetectionCorpus corpus;
  while (std::getline(in, line)) {
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split(line);
    if (f.size() < 4) throw Error(ErrorKind::format, manifest.string() + ": malformed row '" + line + "'");
    const PointId id = csv::parse_uint(f[0], "image_id");
    std::filesystem::path file{std::string(f[1])};
    if (file.is_relative()) file = manifest.parent_path() / file;
    const EmbeddingStore store = load_embeddings(file, EmbeddingFormat::raw_f32);
    if (corpus.dim == 0) corpus.dim = store.dim();
    if (store.dim() != corpus.dim) throw Error(ErrorKind::shape, file.string() + ": box dimension mismatch");

    ObjectFeatureSet set;
    set.image_id = id;
    set.boxes = store.data();
    auto& image = corpus.images[id];
    image.image_id = id;
    if (f[2] == "ground_truth") {
      set.kind = BoxSetKind::ground_truth;
      for (auto c : csv::split(f[3], ';')) set.box_classes.push_back(static_cast<std::uint32_t>(csv::parse_uint(c, "box class")));
      if (set.box_classes.size() != set.box_count()) {
        throw Error(ErrorKind::data, "image " + std::to_string(id) + ": " + std::to_string(set.box_classes.size()) +
                                         " box classes for " + std::to_string(set.box_count()) + " boxes");
      }
      image.ground_truth = std::move(set);
    } else if (f[2] == "proposal") {
      set.kind = BoxSetKind::proposal;
      image.proposals = std::move(set);
    } else {
      throw Error(ErrorKind::format, "unknown box set kind '" + std::string(f[2]) + "'");
    }
    if (has_pool && f.size() >= 5 && !f[4].empty()) {
      if (f[4] == "labeled") {
        image.pool = Pool::labeled;
      } else if (f[4] == "unlabeled") {
        image.pool = Pool::unlabeled;
      } else {
        throw Error(ErrorKind::format, "unknown pool '" + std::string(f[4]) + "'");
      }
    }
  }
  if (corpus.images.empty()) throw Error(ErrorKind::data, manifest.string() + " lists no images");
  return corpus;
}

}  // namespace smi
