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

#include "wildset/hashtag.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "wildset/common.hpp"

namespace wildset {

namespace {

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

void sort_unique(std::vector<std::string>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

SynsetDb SynsetDb::load_tsv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open for read: " + path.string());
    SynsetDb db;
    std::string line;
    size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        const size_t tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) {
            throw CorruptData(path.string() + ":" + std::to_string(lineno) +
                              ": expected `term TAB synset_ids`");
        }
        std::string term = line.substr(0, tab);
        std::vector<std::string> ids;
        std::stringstream rest(line.substr(tab + 1));
        std::string id;
        while (std::getline(rest, id, ',')) {
            if (id.empty()) {
                throw CorruptData(path.string() + ":" + std::to_string(lineno) +
                                  ": empty synset id");
            }
            ids.push_back(id);
        }
        db.add(std::move(term), std::move(ids));
    }
    return db;
}

void SynsetDb::add(std::string term, std::vector<std::string> synsets) {
    if (term.empty()) throw InvalidArgument("synset db: empty term");
    if (synsets.empty()) throw InvalidArgument("synset db: term without synsets");
    std::string key = ascii_lower(term);
    auto& slot = map_[key];
    slot.insert(slot.end(), synsets.begin(), synsets.end());
    sort_unique(slot);
}

const std::vector<std::string>* SynsetDb::lookup(const std::string& term) const {
    auto it = map_.find(ascii_lower(term));
    if (it == map_.end()) return nullptr;
    return &it->second;
}

std::string normalize_tag(std::string_view tag) {
    size_t start = 0;
    while (start < tag.size() && tag[start] == '#') ++start;
    std::string out = ascii_lower(tag.substr(start));
    if (out.empty()) throw InvalidArgument("empty hashtag");
    return out;
}

std::vector<std::string> synset_match(
    const std::string& hashtag, const SynsetDb& db,
    const std::unordered_set<std::string>* restrict_to) {
    const std::string h = normalize_tag(hashtag);
    std::vector<std::string> matched;
    auto take = [&](const std::vector<std::string>* ids) {
        if (ids == nullptr) return;
        for (const auto& id : *ids) {
            if (restrict_to == nullptr || restrict_to->count(id)) {
                matched.push_back(id);
            }
        }
    };
    take(db.lookup(h));
    std::string split;
    split.reserve(h.size() + 1);
    for (size_t pos = 1; pos < h.size(); ++pos) {
        split.assign(h, 0, pos);
        split.push_back(' ');
        split.append(h, pos, std::string::npos);
        take(db.lookup(split));
    }
    sort_unique(matched);
    return matched;
}

CanonicalMap canonical_merge(std::span<const TagCount> tags, const SynsetDb& db) {
    // Normalize spellings and merge duplicate tags first.
    std::map<std::string, uint64_t> counts;
    for (const auto& tc : tags) counts[normalize_tag(tc.tag)] += tc.count;

    // Key groups by the full matched-synset set; empty sets stay apart.
    std::map<std::string, TagGroup> groups;  // key -> group (ordered for determinism)
    size_t singleton = 0;
    for (const auto& [tag, count] : counts) {
        std::vector<std::string> synsets = synset_match(tag, db);
        std::string key;
        if (synsets.empty()) {
            key = "\x01" + std::to_string(singleton++);  // never merges
        } else {
            for (const auto& id : synsets) {
                key += id;
                key.push_back('\n');
            }
        }
        TagGroup& g = groups[key];
        if (g.members.empty()) g.synsets = std::move(synsets);
        g.members.push_back({tag, count});
    }

    CanonicalMap out;
    out.groups.reserve(groups.size());
    for (auto& [key, g] : groups) {
        // members arrive tag-sorted (counts map is ordered)
        uint64_t best = 0;
        for (const auto& m : g.members) best = std::max(best, m.count);
        for (const auto& m : g.members) {
            if (m.count == best) {  // first hit is the lexicographic winner
                g.canonical = m.tag;
                break;
            }
        }
        out.groups.push_back(std::move(g));
    }
    std::sort(out.groups.begin(), out.groups.end(),
              [](const TagGroup& a, const TagGroup& b) {
                  return a.canonical < b.canonical;
              });
    for (const auto& g : out.groups) {
        for (const auto& m : g.members) out.to_canonical[m.tag] = g.canonical;
    }
    return out;
}

std::vector<TagCount> select_vocab(
    std::span<const TagCount> corpus, const SynsetDb& db,
    const std::unordered_set<std::string>& seed_synsets,
    std::optional<uint64_t> top_n) {
    std::map<std::string, uint64_t> counts;
    for (const auto& tc : corpus) counts[normalize_tag(tc.tag)] += tc.count;

    std::vector<TagCount> selected;
    for (const auto& [tag, count] : counts) {
        if (!synset_match(tag, db, &seed_synsets).empty()) {
            selected.push_back({tag, count});
        }
    }
    std::sort(selected.begin(), selected.end(),
              [](const TagCount& a, const TagCount& b) {
                  if (a.count != b.count) return a.count > b.count;
                  return a.tag < b.tag;
              });
    if (top_n && selected.size() > *top_n) selected.resize(*top_n);
    return selected;
}

std::vector<std::string> relabel(std::span<const std::string> tags,
                                 const CanonicalMap& cmap,
                                 const std::unordered_set<std::string>& selected) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& raw : tags) {
        std::string tag;
        try {
            tag = normalize_tag(raw);
        } catch (const InvalidArgument&) {
            continue;  // degenerate tag ("#"), drop
        }
        auto it = cmap.to_canonical.find(tag);
        const std::string& canon = it == cmap.to_canonical.end() ? tag : it->second;
        if (!selected.count(canon)) continue;
        if (seen.insert(canon).second) out.push_back(canon);
    }
    return out;
}

void write_tag_counts(const std::filesystem::path& path,
                      std::span<const TagCount> counts) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for write: " + path.string());
    for (const auto& tc : counts) {
        f << tc.tag << '\t' << tc.count << '\n';
    }
    if (!f) throw IoError("write failed: " + path.string());
}

std::vector<TagCount> read_tag_counts(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open for read: " + path.string());
    std::vector<TagCount> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        const size_t tab = line.find('\t');
        if (tab == std::string::npos || tab == 0) {
            throw CorruptData(path.string() + ":" + std::to_string(lineno) +
                              ": expected `tag TAB count`");
        }
        TagCount tc;
        tc.tag = line.substr(0, tab);
        try {
            tc.count = std::stoull(line.substr(tab + 1));
        } catch (const std::exception&) {
            throw CorruptData(path.string() + ":" + std::to_string(lineno) +
                              ": bad count");
        }
        out.push_back(std::move(tc));
    }
    return out;
}

void write_canonical_map(const std::filesystem::path& path,
                         const CanonicalMap& cmap) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for write: " + path.string());
    for (const auto& g : cmap.groups) {
        for (const auto& m : g.members) {
            f << m.tag << '\t' << g.canonical << '\t' << m.count << '\n';
        }
    }
    if (!f) throw IoError("write failed: " + path.string());
}

CanonicalMap read_canonical_map(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open for read: " + path.string());
    std::map<std::string, std::vector<TagCount>> groups;  // canonical -> members
    std::string line;
    size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        const size_t t1 = line.find('\t');
        const size_t t2 = t1 == std::string::npos ? std::string::npos
                                                  : line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos || t1 == 0 ||
            t2 == t1 + 1) {
            throw CorruptData(path.string() + ":" + std::to_string(lineno) +
                              ": expected `member TAB canonical TAB count`");
        }
        TagCount member;
        member.tag = line.substr(0, t1);
        std::string canonical = line.substr(t1 + 1, t2 - t1 - 1);
        try {
            member.count = std::stoull(line.substr(t2 + 1));
        } catch (const std::exception&) {
            throw CorruptData(path.string() + ":" + std::to_string(lineno) +
                              ": bad count");
        }
        groups[canonical].push_back(std::move(member));
    }
    CanonicalMap out;
    out.groups.reserve(groups.size());
    for (auto& [canonical, members] : groups) {
        TagGroup g;
        g.canonical = canonical;
        std::sort(members.begin(), members.end(),
                  [](const TagCount& a, const TagCount& b) {
                      return a.tag < b.tag;
                  });
        g.members = std::move(members);
        out.groups.push_back(std::move(g));
    }
    for (const auto& g : out.groups) {
        for (const auto& m : g.members) out.to_canonical[m.tag] = g.canonical;
    }
    return out;
}

}  // namespace wildset
