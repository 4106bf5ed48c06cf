// Writes a Gaussian-cluster dataset (embeddings, labels and optionally a
// stand-in probability table) that smi-discover can consume directly.
#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "smi/error.hpp"
#include "smi/synthetic.hpp"

int main(int argc, char** argv) {
  namespace fs = std::filesystem;
  CLI::App app{"Generate a synthetic clustered dataset", "smi-synth"};
  smi::SyntheticSpec spec;
  std::string out = ".";
  std::string format = "csv";
  std::vector<std::uint32_t> known;
  double temperature = 10.0;
  app.add_option("--out", out, "Output directory");
  app.add_option("--classes", spec.classes, "Number of classes")->check(CLI::PositiveNumber);
  app.add_option("--per-class", spec.per_class, "Points per class")->check(CLI::PositiveNumber);
  app.add_option("--dim", spec.dim, "Embedding dimension")->check(CLI::PositiveNumber);
  app.add_option("--sigma", spec.sigma, "Per-coordinate noise before projection")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", spec.seed, "Generator seed");
  app.add_option("--format", format, "Embedding format")->check(CLI::IsMember({"csv", "raw-f32"}));
  app.add_option("--known", known, "Known classes; writes probabilities.csv over them");
  app.add_option("--temperature", temperature, "Softmax temperature for probabilities.csv");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  try {
    const fs::path dir = out;
    fs::create_directories(dir);
    const auto data = smi::gaussian_clusters(spec);
    const auto fmt = smi::parse_embedding_format(format);
    const auto emb = dir / (fmt == smi::EmbeddingFormat::csv ? "embeddings.csv" : "embeddings.f32");
    smi::save_embeddings(data.embeddings, emb, fmt);
    smi::save_labels(data.labels, dir / "labels.csv");
    if (!known.empty()) {
      const std::set<std::uint32_t> k(known.begin(), known.end());
      smi::save_probabilities(smi::nearest_mean_probabilities(data.embeddings, data.labels, k, temperature),
                              dir / "probabilities.csv");
    }
    std::cerr << "wrote " << data.embeddings.size() << " points to " << dir.string() << '\n';
    return 0;
  } catch (const smi::Error& e) {
    std::cerr << "smi-synth: " << e.what() << '\n';
    return smi::exit_code(e.kind());
  }
}
