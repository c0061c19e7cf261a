#pragma once

#include <string>
#include <vector>

#include "attrgen/corpus.hpp"
#include "attrgen/generator.hpp"

namespace attrgen {

std::string html_escape(const std::string& text);

// Self-contained page, one section per output: the sentences, each in its own
// color with its citation ids in brackets, then the source documents with the
// cited spans marked in the citing sentences' colors. Overlapping citations
// from several sentences stack all their color classes on one mark; uncited
// sentences are flagged. Pairs outputs[i] with doc_sets[i]; throws on a size
// mismatch or a citation that names no highlight.
std::string render_html_report(const std::vector<AttributedOutput>& outputs,
                               const std::vector<DocumentSet>& doc_sets);

}  // namespace attrgen
