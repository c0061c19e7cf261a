#include "attrgen/unicode.hpp"

namespace attrgen {

namespace {

constexpr char32_t kReplacement = 0xFFFD;

}  // namespace

std::u32string to_u32(std::string_view utf8) {
  std::u32string out;
  out.reserve(utf8.size());
  std::size_t i = 0;
  const std::size_t n = utf8.size();
  while (i < n) {
    unsigned char b0 = static_cast<unsigned char>(utf8[i]);
    if (b0 < 0x80) {
      out.push_back(b0);
      ++i;
      continue;
    }
    int extra;
    char32_t cp;
    if ((b0 & 0xE0) == 0xC0) {
      extra = 1;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      extra = 2;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      extra = 3;
      cp = b0 & 0x07;
    } else {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    if (i + extra >= n) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    bool ok = true;
    char32_t acc = cp;
    for (int k = 1; k <= extra; ++k) {
      unsigned char b = static_cast<unsigned char>(utf8[i + k]);
      if ((b & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      acc = (acc << 6) | (b & 0x3F);
    }
    if (!ok || acc > 0x10FFFF || (acc >= 0xD800 && acc <= 0xDFFF)) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    // Reject overlong encodings.
    if ((extra == 1 && acc < 0x80) || (extra == 2 && acc < 0x800) ||
        (extra == 3 && acc < 0x10000)) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    out.push_back(acc);
    i += extra + 1;
  }
  return out;
}

void append_utf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string to_utf8(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t cp : text) append_utf8(cp, out);
  return out;
}

bool is_space(char32_t cp) {
  switch (cp) {
    case U' ':
    case U'\t':
    case U'\n':
    case U'\r':
    case U'\f':
    case U'\v':
    case 0x00A0:  // no-break space
    case 0x1680:
    case 0x2028:  // line separator
    case 0x2029:  // paragraph separator
    case 0x202F:
    case 0x205F:
    case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

bool is_digit(char32_t cp) { return cp >= U'0' && cp <= U'9'; }

bool is_letter(char32_t cp) {
  if ((cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z')) return true;
  if (cp == 0x00D7 || cp == 0x00F7) return false;
  if (cp >= 0x00C0 && cp <= 0x024F) return true;  // Latin-1 supplement + extended
  if (cp >= 0x0370 && cp <= 0x03FF) return true;  // Greek
  if (cp >= 0x0400 && cp <= 0x04FF) return true;  // Cyrillic
  return false;
}

bool is_upper(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return true;
  if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) return true;
  if (cp >= 0x0391 && cp <= 0x03A9) return true;
  if (cp >= 0x0410 && cp <= 0x042F) return true;
  return false;
}

bool is_open_quote(char32_t cp) {
  switch (cp) {
    case U'"':
    case U'\'':
    case 0x2018:  // '
    case 0x201C:  // "
    case 0x00AB:  // «
    case 0x2039:
      return true;
    default:
      return false;
  }
}

bool is_closing_mark(char32_t cp) {
  switch (cp) {
    case U'"':
    case U'\'':
    case U')':
    case U']':
    case U'}':
    case 0x2019:  // '
    case 0x201D:  // "
    case 0x00BB:  // »
    case 0x203A:
      return true;
    default:
      return false;
  }
}

char32_t fold_case(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return cp + 32;
  if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) return cp + 32;
  if (cp >= 0x0391 && cp <= 0x03A9) return cp + 32;
  if (cp >= 0x0410 && cp <= 0x042F) return cp + 32;
  // Latin Extended-A alternates case per code point.
  if (cp >= 0x0100 && cp <= 0x0177 && (cp % 2 == 0)) return cp + 1;
  return cp;
}

std::u32string fold_punct(char32_t cp) {
  switch (cp) {
    case 0x2018:
    case 0x2019:
    case 0x201A:
    case 0x02BC:
      return U"'";
    case 0x201C:
    case 0x201D:
    case 0x201E:
      return U"\"";
    case 0x2010:
    case 0x2011:
    case 0x2012:
    case 0x2013:
    case 0x2014:
    case 0x2015:
    case 0x2212:
      return U"-";
    case 0x2026:
      return U"...";
    case 0x200B:
    case 0x200C:
    case 0x200D:
    case 0xFEFF:
      return U"";
    default:
      return std::u32string(1, cp);
  }
}

std::size_t count_words(std::u32string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (char32_t cp : text) {
    if (is_space(cp)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++count;
    }
  }
  return count;
}

std::size_t count_words(std::string_view utf8) { return count_words(to_u32(utf8)); }

std::vector<std::string> split_words(std::string_view utf8) {
  std::u32string text = to_u32(utf8);
  std::vector<std::string> words;
  std::u32string cur;
  for (char32_t cp : text) {
    if (is_space(cp)) {
      if (!cur.empty()) {
        words.push_back(to_utf8(cur));
        cur.clear();
      }
    } else {
      cur.push_back(cp);
    }
  }
  if (!cur.empty()) words.push_back(to_utf8(cur));
  return words;
}

}  // namespace attrgen
