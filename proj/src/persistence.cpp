#include "exmap/persistence.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include "exmap/error.hpp"

namespace exmap {

namespace fs = std::filesystem;

std::string slugify(std::string_view text) {
  std::string out;
  bool dash = false;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      if (dash && !out.empty()) out.push_back('-');
      out.push_back(static_cast<char>(std::tolower(c)));
      dash = false;
    } else {
      dash = true;
    }
  }
  if (out.empty()) throw ValidationError("'" + std::string(text) + "' has no usable characters");
  return out;
}

std::string sha256_hex(std::string_view data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &length) != 1) {
    throw Error("SHA-256 computation failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, std::string_view content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("write failed for " + path.string());
}

std::string directory_checksum(const fs::path& directory) {
  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(directory)) {
    if (!entry.is_regular_file()) continue;
    auto relative = fs::relative(entry.path(), directory).generic_string();
    if (relative == "edition.json") continue;
    files.push_back(std::move(relative));
  }
  std::sort(files.begin(), files.end());
  std::string material;
  for (const auto& f : files) {
    const auto content = read_file(directory / f);
    material += f;
    material.push_back('\0');
    material += std::to_string(content.size());
    material.push_back('\0');
    material += sha256_hex(content);
    material.push_back('\n');
  }
  return sha256_hex(material);
}

EditionStore::EditionStore(fs::path root) : root_(std::move(root)) {}

std::string EditionStore::ranking_path(const TableKey& key) {
  return "rankings/" + slugify(key.subject) + "/" + std::string(to_string(key.indicator)) + "/" +
         std::string(to_string(key.covariate)) + ".json";
}

std::string EditionStore::fit_path(const TableKey& key) {
  return "fits/" + slugify(key.subject) + "/" + std::string(to_string(key.indicator)) + "/" +
         std::string(to_string(key.covariate)) + ".json";
}

Json EditionStore::read_manifest() const {
  const auto path = root_ / "manifest.json";
  if (!fs::exists(path)) return Json{{"editions", Json::array()}};
  return Json::parse(read_file(path));
}

fs::path EditionStore::edition_dir(const std::string& edition_id) const {
  const auto manifest = read_manifest();
  for (const auto& e : manifest.at("editions")) {
    if (e.at("edition_id").get<std::string>() == edition_id) {
      return root_ / e.at("directory").get<std::string>();
    }
  }
  throw NotFoundError("unknown edition '" + edition_id + "'");
}

bool EditionStore::contains(const std::string& edition_id) const {
  const auto manifest = read_manifest();
  for (const auto& e : manifest.at("editions")) {
    if (e.at("edition_id").get<std::string>() == edition_id) return true;
  }
  return false;
}

std::string EditionStore::store_edition(const EditionBundle& bundle) {
  const auto& ed = bundle.edition;
  if (ed.edition_id.empty()) throw ValidationError("edition id is empty");
  if (ed.window_first > ed.window_last) {
    throw ValidationError("publication window starts after it ends");
  }
  if (ed.covariates.empty() || ed.covariates.front() != Covariate::none) {
    throw ValidationError("an edition must include the unadjusted model first");
  }
  std::set<std::string> slugs;
  for (const auto& s : ed.subjects) {
    if (!slugs.insert(slugify(s)).second) throw ValidationError("subject slug collision for " + s);
  }

  std::set<TableKey> expected;
  for (const auto& s : ed.subjects) {
    for (auto i : ed.indicators) {
      for (auto c : ed.covariates) expected.insert({s, i, c});
    }
  }
  auto check_keys = [&](const auto& map, const char* what) {
    for (const auto& key : expected) {
      if (!map.contains(key)) {
        throw ValidationError(std::string("missing ") + what + " for " + key.subject + "/" +
                              std::string(to_string(key.indicator)) + "/" +
                              std::string(to_string(key.covariate)));
      }
    }
    for (const auto& [key, value] : map) {
      if (!expected.contains(key)) {
        throw ValidationError(std::string("unexpected ") + what + " for " + key.subject);
      }
    }
  };
  check_keys(bundle.rankings, "ranking");
  check_keys(bundle.fits, "fit");
  for (const auto& ds : bundle.datasets) {
    if (std::find(ed.subjects.begin(), ed.subjects.end(), ds.subject_area) == ed.subjects.end()) {
      throw ValidationError("dataset for subject outside the edition: " + ds.subject_area);
    }
  }

  const auto directory = slugify(ed.edition_id);
  auto manifest = read_manifest();
  for (const auto& e : manifest.at("editions")) {
    if (e.at("edition_id").get<std::string>() == ed.edition_id ||
        e.at("directory").get<std::string>() == directory) {
      throw ConflictError("edition '" + ed.edition_id + "' is already stored");
    }
  }
  if (fs::exists(root_ / directory)) {
    throw ConflictError("edition directory '" + directory + "' already exists");
  }

  fs::create_directories(root_);
  static std::atomic<unsigned> counter{0};
  const auto staging =
      root_ / (".staging-" + directory + "-" +
               std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()) + "-" +
               std::to_string(counter++));
  try {
    for (const auto& [key, table] : bundle.rankings) {
      write_file(staging / ranking_path(key), to_json(table, ed.edition_id).dump(1));
    }
    for (const auto& [key, fit] : bundle.fits) {
      write_file(staging / fit_path(key), to_json(fit).dump(1));
    }
    for (const auto& ds : bundle.datasets) {
      write_file(staging / ("datasets/" + std::string(to_string(ds.indicator)) + "/" +
                            slugify(ds.subject_area) + ".json"),
                 to_json(ds).dump(1));
    }
    for (const auto& [relative, content] : bundle.documents) {
      if (relative.empty() || relative.front() == '/' || relative.find("..") != std::string::npos ||
          relative == "edition.json") {
        throw ValidationError("invalid document path '" + relative + "'");
      }
      write_file(staging / relative, content);
    }
    const auto checksum = directory_checksum(staging);
    auto edition_doc = to_json(ed);
    edition_doc["checksum"] = checksum;
    write_file(staging / "edition.json", edition_doc.dump(1));
    fs::rename(staging, root_ / directory);

    manifest["editions"].push_back(
        Json{{"edition_id", ed.edition_id}, {"directory", directory}, {"checksum", checksum}});
    const auto tmp = root_ / ("manifest.json.tmp-" + std::to_string(counter++));
    write_file(tmp, manifest.dump(1));
    fs::rename(tmp, root_ / "manifest.json");
    return checksum;
  } catch (...) {
    std::error_code ignored;
    fs::remove_all(staging, ignored);
    throw;
  }
}

EditionSummary EditionStore::summary(const std::string& edition_id) const {
  const auto doc = Json::parse(read_file(edition_dir(edition_id) / "edition.json"));
  return {edition_from_json(doc), doc.at("checksum").get<std::string>()};
}

std::vector<EditionSummary> EditionStore::list() const {
  std::vector<EditionSummary> out;
  const auto manifest = read_manifest();
  for (const auto& e : manifest.at("editions")) {
    out.push_back(summary(e.at("edition_id").get<std::string>()));
  }
  return out;
}

std::string EditionStore::load_ranking_document(const std::string& edition_id,
                                                const TableKey& key) const {
  const auto path = edition_dir(edition_id) / ranking_path(key);
  if (!fs::exists(path)) {
    throw NotFoundError("no ranking for " + key.subject + "/" +
                        std::string(to_string(key.indicator)) + "/" +
                        std::string(to_string(key.covariate)) + " in edition " + edition_id);
  }
  return read_file(path);
}

RankingTable EditionStore::load_ranking(const std::string& edition_id, const TableKey& key) const {
  return ranking_from_json(Json::parse(load_ranking_document(edition_id, key)));
}

FitResult EditionStore::load_fit(const std::string& edition_id, const TableKey& key) const {
  const auto path = edition_dir(edition_id) / fit_path(key);
  if (!fs::exists(path)) throw NotFoundError("no fit for " + key.subject);
  return fit_from_json(Json::parse(read_file(path)));
}

std::string EditionStore::read_document(const std::string& edition_id,
                                        const std::string& relative) const {
  if (relative.find("..") != std::string::npos) throw NotFoundError("invalid document path");
  const auto path = edition_dir(edition_id) / relative;
  if (!fs::exists(path)) throw NotFoundError("no document '" + relative + "' in " + edition_id);
  return read_file(path);
}

std::vector<TableKey> EditionStore::ranking_keys(const std::string& edition_id) const {
  const auto ed = summary(edition_id).edition;
  std::vector<TableKey> keys;
  for (const auto& s : ed.subjects) {
    for (auto i : ed.indicators) {
      for (auto c : ed.covariates) keys.push_back({s, i, c});
    }
  }
  return keys;
}

}  // namespace exmap
