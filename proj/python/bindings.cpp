#include <sstream>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "phrasecraft/cli.hpp"
#include "phrasecraft/composer.hpp"
#include "phrasecraft/contrastive.hpp"
#include "phrasecraft/error.hpp"
#include "phrasecraft/evalsuite.hpp"
#include "phrasecraft/gradcheck.hpp"
#include "phrasecraft/pntm.hpp"
#include "phrasecraft/vecstore.hpp"

namespace py = pybind11;
using namespace phrasecraft;

namespace {

py::array_t<double> to_array(const Matrix& m) {
  py::array_t<double> out({m.rows(), m.cols()});
  auto view = out.mutable_unchecked<2>();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) view(r, c) = m(r, c);
  }
  return out;
}

Matrix from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw InvalidArgument("expected a 2-d array");
  Matrix m(a.shape(0), a.shape(1));
  auto view = a.unchecked<2>();
  for (py::ssize_t r = 0; r < a.shape(0); ++r) {
    for (py::ssize_t c = 0; c < a.shape(1); ++c) m(r, c) = view(r, c);
  }
  return m;
}

Embeddings make_embeddings(std::vector<std::string> surfaces,
                           const py::array_t<double, py::array::c_style | py::array::forcecast>& vectors) {
  Embeddings e{Vocab(std::move(surfaces)), from_array(vectors)};
  e.validate();
  return e;
}

std::vector<std::string> tokens_of(const std::string& text) { return tokenize(text); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Phrase embedding, evaluation and topic-model core";

  py::register_exception<Error>(m, "PhrasecraftError");
  py::register_exception<ParseError>(m, "ParseError", m.attr("PhrasecraftError"));
  py::register_exception<DataError>(m, "DataError", m.attr("PhrasecraftError"));
  py::register_exception<NumericError>(m, "NumericError", m.attr("PhrasecraftError"));
  py::register_exception<IoError>(m, "IoError", m.attr("PhrasecraftError"));
  py::register_exception<InvalidArgument>(m, "InvalidArgument", m.attr("PhrasecraftError"));

  py::class_<Embeddings>(m, "Embeddings")
      .def(py::init(&make_embeddings), py::arg("surfaces"), py::arg("vectors"))
      .def_property_readonly("surfaces", [](const Embeddings& e) { return e.vocab.entries(); })
      .def_property_readonly("vectors", [](const Embeddings& e) { return to_array(e.matrix); })
      .def_property_readonly("dim", &Embeddings::dim)
      .def("__len__", &Embeddings::size)
      .def("__contains__", [](const Embeddings& e, const std::string& s) { return e.vocab.contains(s); })
      .def("lookup", [](const Embeddings& e, const std::string& s) -> std::optional<std::vector<double>> {
        const auto row = e.lookup(s);
        if (!row) return std::nullopt;
        return std::vector<double>(row->begin(), row->end());
      });

  m.def("load_vectors", [](const std::filesystem::path& path, const std::string& format) {
        return format.empty() ? load_vectors(path) : load_vectors(path, parse_vector_format(format));
      },
      py::arg("path"), py::arg("format") = "",
      "Loads pvec-text, pvec-bin or GloVe vectors; the format is detected when omitted.");
  m.def("save_vectors", [](const Embeddings& e, const std::filesystem::path& path, const std::string& format) {
        save_vectors(e, path, parse_vector_format(format));
      },
      py::arg("embeddings"), py::arg("path"), py::arg("format") = "pvec-bin");
  m.def("detect_vector_format", [](const std::filesystem::path& p) {
        return std::string(to_string(detect_vector_format(p)));
      });

  m.def("nearest_neighbors",
        [](const Embeddings& e, const std::vector<double>& query, std::size_t k, const std::string& metric,
           std::optional<std::string> exclude) {
          std::optional<std::string_view> ex;
          if (exclude) ex = *exclude;
          const auto nn = nearest_neighbors(query, e, k, parse_metric(metric), ex);
          std::vector<std::pair<std::string, double>> out;
          for (const auto& h : nn.hits) out.emplace_back(h.surface, h.score);
          return out;
        },
        py::arg("embeddings"), py::arg("query"), py::arg("k") = 10, py::arg("metric") = "cosine",
        py::arg("exclude") = py::none());
  m.def("cosine", [](const std::vector<double>& a, const std::vector<double>& b) { return cosine(a, b); });

  m.def("tokenize", &tokens_of, py::arg("text"));
  m.def("embed_phrase",
        [](const Embeddings& e, const std::string& text, const std::string& oov) {
          ComposerModel model = ComposerModel::from_embeddings(e);
          model.oov_policy = parse_oov_policy(oov);
          bool unknown = false;
          auto v = embed_phrase(model, Phrase::from_text(text), &unknown);
          return std::make_pair(v, unknown);
        },
        py::arg("embeddings"), py::arg("text"), py::arg("oov") = "skip",
        "Mean-pooled phrase vector and whether every token was unknown.");

  m.def("triplet_loss",
        [](const std::vector<double>& p, const std::vector<double>& q, const std::vector<double>& n,
           double margin) { return triplet_loss(p, q, n, margin); },
        py::arg("anchor"), py::arg("positive"), py::arg("negative"), py::arg("margin") = 1.0);

  m.def("levenshtein", [](const std::string& a, const std::string& b) {
        return levenshtein(tokenize(a), tokenize(b));
      }, "Token-level edit distance between two phrases.");
  m.def("levenshtein_chars", [](const std::string& a, const std::string& b) { return levenshtein_chars(a, b); });
  m.def("longest_common_substring", [](const std::string& a, const std::string& b) {
        return longest_common_substring(tokenize(a), tokenize(b));
      }, "Length in tokens of the longest shared contiguous run.");
  m.def("pearson", [](const std::vector<double>& x, const std::vector<double>& y) { return pearson(x, y); });
  m.def("spearman", [](const std::vector<double>& x, const std::vector<double>& y) { return spearman(x, y); });

  m.def("filter_ppdb", [](const std::vector<std::tuple<std::string, std::string, bool>>& pairs) {
        std::vector<PairItem> items;
        for (const auto& [a, b, pos] : pairs) items.push_back({Phrase::from_text(a), Phrase::from_text(b), pos});
        std::vector<std::tuple<std::string, std::string, bool>> out;
        for (const auto& it : filter_ppdb(items)) out.emplace_back(it.a.surface, it.b.surface, it.positive);
        return out;
      });

  m.def("topic_distribution", [](const py::array_t<double>& topics, const std::vector<double>& doc) {
        return topic_distribution(from_array(topics), doc);
      });
  m.def("orthogonality_penalty", [](const py::array_t<double>& topics) {
        return orthogonality_penalty(from_array(topics));
      });
  m.def("interpret_topics",
        [](const py::array_t<double>& topics, const Embeddings& vocab, std::size_t top) {
          std::vector<std::vector<std::pair<std::string, double>>> out;
          for (const auto& d : interpret_topics(from_array(topics), vocab, top)) out.push_back(d.items);
          return out;
        },
        py::arg("topics"), py::arg("vocab"), py::arg("top") = 10);

  m.def("gradient_suite", [](std::uint64_t seed) {
        std::vector<std::tuple<std::string, std::size_t, double>> out;
        for (const auto& r : run_gradient_suite(seed)) out.emplace_back(r.name, r.parameters, r.max_rel_error);
        return out;
      }, py::arg("seed") = 0);

  m.def("run_cli", [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = cli::dispatch(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs one CLI command; returns (exit code, stdout, stderr).");

  m.attr("__version__") = PHRASECRAFT_VERSION;
}
