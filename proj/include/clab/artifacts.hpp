#ifndef CLAB_ARTIFACTS_HPP
#define CLAB_ARTIFACTS_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "clab/common.hpp"

namespace clab {

inline constexpr const char* kToolName = "contraction-lab";
inline constexpr const char* kToolVersion = "0.1.0";

std::string sha256_hex(std::string_view bytes);

// Canonical serialization: object keys sorted, numbers re-emitted in their
// shortest round-trip form, no insignificant whitespace.
std::string canonical_json(const nlohmann::json& j);

// "sha256:<hex>" digest of the canonical serialization.
std::string config_hash(const nlohmann::json& j);

// Writes through a temp file in the same directory followed by a rename, so
// a crash never leaves a half-written artifact under the final name.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

// Header row plus equal-length numeric columns, rendered with %.17g.
std::string render_csv(const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& columns);

// Points, one per row; an initial non-numeric row is treated as a header.
Mat read_points_csv(const std::filesystem::path& path);

struct SvgSeries {
    std::string label;
    std::vector<double> x, y;
};

// Minimal static line plot: axes, ticks, legend, one polyline per series.
std::string render_svg(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<SvgSeries>& series);

// Collects the files of one run and writes the manifest last. Two runs with
// identical inputs produce manifests that differ only in the timestamp.
class ArtifactWriter {
  public:
    ArtifactWriter(std::filesystem::path dir, std::string subcommand, std::string cfg_hash,
                   std::uint64_t seed);

    void write(const std::string& name, std::string_view content);
    void write_json(const std::string& name, const nlohmann::json& j);
    const std::filesystem::path& dir() const { return dir_; }

    // writes manifest.json; call once, after the last artifact
    void finalize();

  private:
    struct Entry {
        std::string name, sha256;
        std::uint64_t bytes = 0;
    };
    std::filesystem::path dir_;
    std::string subcommand_, cfg_hash_;
    std::uint64_t seed_ = 0;
    std::vector<Entry> entries_;
};

}  // namespace clab

#endif
