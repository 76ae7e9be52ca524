#ifndef COVEX_SRC_UNICODE_FOLD_HPP
#define COVEX_SRC_UNICODE_FOLD_HPP

namespace covex::text {

// Lowercases and strips accents the way uncased BERT vocabularies expect.
// Covers ASCII through Cyrillic (U+052F); other code points pass through.
// Returns 0 for combining marks, which are dropped.
char32_t fold_code_point(char32_t cp);

}  // namespace covex::text

#endif  // COVEX_SRC_UNICODE_FOLD_HPP
