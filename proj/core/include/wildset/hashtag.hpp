// Copyright 2026-present the wildset authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace wildset {

/// Offline lexical snapshot: term -> synset ids. Terms may contain spaces
/// ("brown bear"). Lookup is case-normalized; unknown terms match nothing.
class SynsetDb {
  public:
    /// Line format: `term TAB synset_id[,synset_id...]`. Repeated terms
    /// union their ids.
    static SynsetDb load_tsv(const std::filesystem::path& path);

    void add(std::string term, std::vector<std::string> synsets);
    /// Sorted unique ids, or nullptr when the term is absent.
    const std::vector<std::string>* lookup(const std::string& term) const;
    size_t size() const { return map_.size(); }

  private:
    std::unordered_map<std::string, std::vector<std::string>> map_;
};

/// Strips leading '#' and lowercases ASCII letters; other bytes pass
/// through untouched. Empty result -> invalid argument.
std::string normalize_tag(std::string_view tag);

/// Synset ids matched by a hashtag: the union of db hits for the tag
/// itself and for every two-part split ("brownbear" -> "b rownbear",
/// "br ownbear", ..., "brownbea r"), optionally intersected with a
/// restriction set. Result sorted unique.
std::vector<std::string> synset_match(
    const std::string& hashtag, const SynsetDb& db,
    const std::unordered_set<std::string>* restrict_to = nullptr);

struct TagCount {
    std::string tag;
    uint64_t count = 0;
};

struct TagGroup {
    std::string canonical;
    std::vector<TagCount> members;     // sorted by tag
    std::vector<std::string> synsets;  // the shared matched-synset set
};

/// Partition of a tag corpus into merge groups; every member maps to one
/// canonical representative.
struct CanonicalMap {
    std::vector<TagGroup> groups;  // sorted by canonical
    std::unordered_map<std::string, std::string> to_canonical;
};

/// Groups tags whose full matched-synset sets are equal and non-empty;
/// tags matching nothing stay singletons. Canonical representative is the
/// most frequent member (tie: lexicographically first). Input tags are
/// normalized; duplicate spellings merge their counts.
CanonicalMap canonical_merge(std::span<const TagCount> tags, const SynsetDb& db);

/// Tags whose matched-synset set intersected with the seed set is
/// non-empty, ranked by count descending (tie: tag ascending), optionally
/// truncated to the top n.
std::vector<TagCount> select_vocab(
    std::span<const TagCount> corpus, const SynsetDb& db,
    const std::unordered_set<std::string>& seed_synsets,
    std::optional<uint64_t> top_n = std::nullopt);

/// Maps each tag to its canonical form, drops tags outside the selected
/// set, and collapses duplicates (first occurrence kept). Unnormalizable
/// tags (empty after '#' stripping) are dropped. May return empty.
std::vector<std::string> relabel(std::span<const std::string> tags,
                                 const CanonicalMap& cmap,
                                 const std::unordered_set<std::string>& selected);

// Line-delimited `tag TAB count` records.
void write_tag_counts(const std::filesystem::path& path,
                      std::span<const TagCount> counts);
std::vector<TagCount> read_tag_counts(const std::filesystem::path& path);

// Line-delimited `member TAB canonical TAB count` records. Reading
// reconstructs groups (matched-synset sets are not persisted).
void write_canonical_map(const std::filesystem::path& path,
                         const CanonicalMap& cmap);
CanonicalMap read_canonical_map(const std::filesystem::path& path);

}  // namespace wildset
