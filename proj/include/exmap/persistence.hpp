#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "exmap/serialize.hpp"

namespace exmap {

struct TableKey {
  std::string subject;
  Indicator indicator = Indicator::best_paper;
  Covariate covariate = Covariate::none;

  auto operator<=>(const TableKey&) const = default;
};

/// Lower-case path component: letters and digits kept, everything else
/// collapsed to single dashes.
std::string slugify(std::string_view text);

std::string sha256_hex(std::string_view data);

struct EditionBundle {
  Edition edition;
  std::vector<SubjectDataset> datasets;
  std::map<TableKey, FitResult> fits;
  std::map<TableKey, RankingTable> rankings;
  /// Additional documents (reports, curves) keyed by relative path.
  std::map<std::string, std::string> documents;
};

struct EditionSummary {
  Edition edition;
  std::string checksum;
};

/// Append-only store of editions laid out as
///   <root>/manifest.json
///   <root>/<edition>/edition.json
///   <root>/<edition>/rankings/<subject>/<indicator>/<covariate>.json
///   <root>/<edition>/fits/<subject>/<indicator>/<covariate>.json
///   <root>/<edition>/datasets/<indicator>/<subject>.json
/// plus any extra documents of the bundle. An edition becomes visible only
/// after its directory is complete and the manifest has been replaced.
class EditionStore {
 public:
  explicit EditionStore(std::filesystem::path root);

  /// Validates completeness, writes the edition and returns its checksum.
  /// Throws ValidationError for incomplete bundles and ConflictError when the
  /// edition id is already stored.
  std::string store_edition(const EditionBundle& bundle);

  std::vector<EditionSummary> list() const;
  EditionSummary summary(const std::string& edition_id) const;
  bool contains(const std::string& edition_id) const;

  /// Raw stored bytes of a ranking document. Throws NotFoundError.
  std::string load_ranking_document(const std::string& edition_id, const TableKey& key) const;
  RankingTable load_ranking(const std::string& edition_id, const TableKey& key) const;
  FitResult load_fit(const std::string& edition_id, const TableKey& key) const;
  std::string read_document(const std::string& edition_id, const std::string& relative) const;

  /// Every ranking key the edition declares.
  std::vector<TableKey> ranking_keys(const std::string& edition_id) const;

  const std::filesystem::path& root() const noexcept { return root_; }

  static std::string ranking_path(const TableKey& key);
  static std::string fit_path(const TableKey& key);

 private:
  std::filesystem::path edition_dir(const std::string& edition_id) const;
  Json read_manifest() const;

  std::filesystem::path root_;
};

/// Checksum over every file below `directory` except edition.json, in path
/// order.
std::string directory_checksum(const std::filesystem::path& directory);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace exmap
