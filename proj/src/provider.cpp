#include "smi/provider.hpp"

#include <csignal>
#include <cstdio>
#include <string>

#include <sys/wait.h>

#include "smi/error.hpp"

namespace smi {

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

}  // namespace

EmbeddingStore refresh_embeddings(const std::string& command, std::span<const PointId> labeled,
                                  const std::filesystem::path& out_path) {
  if (command.empty()) throw Error(ErrorKind::config, "embedding provider command is empty");
  std::error_code ec;
  std::filesystem::remove(out_path, ec);
  const std::string line = command + " " + shell_quote(out_path.string());
  // a child that exits without draining stdin must not take us down with it
  auto old = std::signal(SIGPIPE, SIG_IGN);
  FILE* pipe = ::popen(line.c_str(), "w");
  if (!pipe) std::signal(SIGPIPE, old);
  if (!pipe) throw Error(ErrorKind::provider, "cannot start embedding provider: " + command);
  for (auto id : labeled) {
    if (std::fprintf(pipe, "%llu\n", static_cast<unsigned long long>(id)) < 0) break;  // child may ignore stdin
  }
  const int status = ::pclose(pipe);
  std::signal(SIGPIPE, old);
  if (status == -1) throw Error(ErrorKind::provider, "embedding provider did not terminate cleanly: " + command);
  if (WIFSIGNALED(status)) {
    throw Error(ErrorKind::provider,
                "embedding provider killed by signal " + std::to_string(WTERMSIG(status)) + ": " + command);
  }
  if (WEXITSTATUS(status) != 0) {
    throw Error(ErrorKind::provider,
                "embedding provider exited with status " + std::to_string(WEXITSTATUS(status)) + ": " + command);
  }
  try {
    auto store = load_embeddings(out_path, EmbeddingFormat::raw_f32);
    return store.normalized() ? store : normalize(store);
  } catch (const Error& e) {
    throw Error(ErrorKind::provider, std::string("embedding provider output unusable: ") + e.message());
  }
}

}  // namespace smi
