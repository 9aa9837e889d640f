#include "dancer/synthetic.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "dancer/rng.hpp"
#include "dancer/utf8.hpp"

namespace dancer {

namespace {

constexpr std::u32string_view kNameChars =
    U"张章彰樟王亡李里理礼力利立丽历明名铭鸣华滑伟玮纬苇维薇唯围家佳嘉加新心欣鑫辛宇雨语羽禹天添龙隆珑飞菲非妃"
    U"成城诚程承阳杨洋扬东冬文闻雯志智至致建健剑鉴平萍屏苹红宏鸿洪军君钧均峰锋丰枫风慧惠会汇林琳霖临青清轻卿"
    U"博伯泊瑞锐睿凯楷铠祥翔详英鹰樱莺周洲舟州陈晨辰臣刘流留琉胜圣盛";

struct Topic {
  std::u32string role;
  std::vector<std::u32string> words;
};

const std::vector<Topic>& topics() {
  static const std::vector<Topic> kTopics = {
      {U"职业运动员", {U"篮球", U"足球", U"比赛", U"冠军", U"球队", U"教练", U"进球", U"联赛"}},
      {U"流行歌手", {U"歌手", U"专辑", U"演唱", U"乐队", U"唱片", U"舞台", U"歌曲", U"音乐"}},
      {U"科技企业家", {U"手机", U"芯片", U"软件", U"网络", U"电脑", U"数据", U"研发", U"系统"}},
      {U"金融分析师", {U"银行", U"股票", U"投资", U"基金", U"利率", U"贷款", U"证券", U"财报"}},
      {U"电影导演", {U"电影", U"导演", U"票房", U"剧组", U"影片", U"拍摄", U"首映", U"角色"}},
      {U"旅游胜地", {U"景区", U"游客", U"酒店", U"航班", U"门票", U"古镇", U"旅游", U"海滩"}},
  };
  return kTopics;
}

// E = entity, A/B = topic words.
const std::vector<std::u32string>& templates() {
  static const std::vector<std::u32string> kTemplates = {
      U"昨天A结束后E接受了采访", U"据报道E近期在A方面表现突出", U"E表示今年的A和B都很重要",
      U"记者了解到E正在筹备新的A",  U"关于A的消息E并没有回应",     U"A领域的E最近宣布了B计划",
  };
  return kTemplates;
}

struct Group {
  std::vector<std::string> syllables;
  std::vector<std::u32string> members;
  std::vector<std::size_t> member_topics;
};

class Generator {
 public:
  Generator(std::shared_ptr<const PronunciationLexicon> lex, const SyntheticConfig& cfg)
      : lex_(std::move(lex)), cfg_(cfg), rng_(cfg.seed) {
    for (char32_t c : kNameChars) {
      const auto* prons = lex_->lookup(c);
      if (prons == nullptr) throw std::runtime_error("lexicon lacks name character " + utf8_encode(c));
      by_syllable_[prons->front()].push_back(c);
    }
    for (auto it = by_syllable_.begin(); it != by_syllable_.end();) {
      it = it->second.size() < 2 ? by_syllable_.erase(it) : std::next(it);
    }
    for (const auto& [syl, chars] : by_syllable_) syllables_.push_back(syl);
    if (syllables_.size() < 4) throw std::runtime_error("lexicon has too few homophone syllables");
  }

  SyntheticData run() {
    SyntheticData data{EntityCatalog(lex_), EntityCatalog(lex_), {}, {}};
    make_groups();

    std::vector<std::pair<std::u32string, std::size_t>> listed;  // surface, topic
    for (const auto& g : groups_) {
      for (std::size_t i = 0; i < g.members.size(); ++i) listed.emplace_back(g.members[i], g.member_topics[i]);
    }
    rng_.shuffle(listed);
    for (const auto& [surface, topic] : listed) {
      const auto s = utf8_encode(surface);
      data.catalog.add(s);
      data.catalog.attach_description(s, utf8_encode(describe(surface, topic)));
      data.pool.add(s);
      data.pool.attach_description(s, utf8_encode(describe(surface, topic)));
    }
    add_padding(data.pool);

    for (std::size_t u = 0; u < cfg_.utterances; ++u) data.corpus.push_back(make_utterance(u));
    make_training(data.training);
    return data;
  }

 private:
  std::u32string spell(const std::vector<std::string>& syllables) {
    std::u32string out;
    for (const auto& s : syllables) out.push_back(rng_.pick(by_syllable_.at(s)));
    return out;
  }

  std::u32string describe(const std::u32string& surface, std::size_t topic) {
    const auto& t = topics()[topic];
    auto words = t.words;
    rng_.shuffle(words);
    std::u32string d = surface + U"是一位" + t.role + U"，长期活跃于";
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (i) d += U"、";
      d += words[i];
    }
    d += U"等领域。";
    return d;
  }

  void make_groups() {
    std::set<std::vector<std::string>> seen;
    while (groups_.size() < cfg_.groups) {
      Group g;
      const std::size_t len = rng_.chance(0.7) ? 2 : 3;
      for (std::size_t i = 0; i < len; ++i) g.syllables.push_back(rng_.pick(syllables_));
      if (!seen.insert(g.syllables).second) continue;
      const double r = rng_.unit();
      const std::size_t members = r < 0.2 ? 1 : (r < 0.7 ? 2 : 3);
      std::vector<std::size_t> topic_order(topics().size());
      for (std::size_t i = 0; i < topic_order.size(); ++i) topic_order[i] = i;
      rng_.shuffle(topic_order);
      std::set<std::u32string> used;
      for (std::size_t attempt = 0; g.members.size() < members && attempt < 50; ++attempt) {
        auto s = spell(g.syllables);
        if (!used.insert(s).second || taken_.count(s)) continue;
        taken_.insert(s);
        g.members.push_back(s);
        g.member_topics.push_back(topic_order[g.members.size() - 1]);
      }
      groups_.push_back(std::move(g));
    }
  }

  void add_padding(EntityCatalog& pool) {
    auto add = [&](const std::u32string& s) {
      if (pool.size() >= cfg_.pool_size || taken_.count(s)) return;
      taken_.insert(s);
      const auto utf8 = utf8_encode(s);
      pool.add(utf8);
      pool.attach_description(utf8, utf8_encode(describe(s, rng_.index(topics().size()))));
    };
    for (const auto& g : groups_) {
      for (std::size_t i = 0; i < cfg_.max_pool_homophones * 4 && i < 200; ++i) {
        if (pool.size() >= cfg_.pool_size) break;
        add(spell(g.syllables));
        std::size_t extra = 0;
        for (const auto& e : pool.entities()) extra += e.phonetic.syllables == phonetic_of(g.syllables) ? 1 : 0;
        if (extra >= g.members.size() + cfg_.max_pool_homophones) break;
      }
    }
    for (std::size_t attempt = 0; pool.size() < cfg_.pool_size && attempt < cfg_.pool_size * 20; ++attempt) {
      std::vector<std::string> syl;
      const std::size_t len = rng_.chance(0.7) ? 2 : 3;
      for (std::size_t i = 0; i < len; ++i) syl.push_back(rng_.pick(syllables_));
      add(spell(syl));
    }
  }

  std::vector<std::string> phonetic_of(const std::vector<std::string>& syllables) const {
    if (lex_->tone_mode() == ToneMode::kWithTone) return syllables;
    std::vector<std::string> out;
    for (auto s : syllables) {
      if (s.size() > 1 && std::isdigit(static_cast<unsigned char>(s.back()))) s.pop_back();
      out.push_back(s);
    }
    return out;
  }

  std::u32string homophone_of(const Group& g, const std::u32string& avoid) {
    for (int attempt = 0; attempt < 20; ++attempt) {
      auto s = spell(g.syllables);
      if (s != avoid) return s;
    }
    return near_of(g, avoid);
  }

  std::u32string near_of(const Group& g, const std::u32string& gold) {
    std::u32string s = gold;
    const std::size_t pos = rng_.index(s.size());
    std::string other;
    do {
      other = rng_.pick(syllables_);
    } while (other == g.syllables[pos]);
    s[pos] = rng_.pick(by_syllable_.at(other));
    return s;
  }

  struct Sentence {
    std::u32string text;
    Range entity;
    Range word_a;
  };

  static Sentence fill(const std::u32string& tmpl, const std::u32string& entity, const std::u32string& a,
                       const std::u32string& b) {
    Sentence s;
    for (char32_t c : tmpl) {
      if (c == U'E') {
        s.entity = {s.text.size(), s.text.size() + entity.size()};
        s.text += entity;
      } else if (c == U'A') {
        s.word_a = {s.text.size(), s.text.size() + a.size()};
        s.text += a;
      } else if (c == U'B') {
        s.text += b;
      } else {
        s.text.push_back(c);
      }
    }
    return s;
  }

  Utterance make_utterance(std::size_t index) {
    const Group& g = groups_[rng_.index(groups_.size())];
    const std::size_t m = rng_.index(g.members.size());
    const auto& gold = g.members[m];
    const auto& topic = topics()[g.member_topics[m]];
    const auto& tmpl = rng_.pick(templates());
    auto words = topic.words;
    rng_.shuffle(words);

    const double r = rng_.unit();
    std::u32string top_entity = gold;
    if (r < cfg_.homophone_rate) {
      top_entity = homophone_of(g, gold);
    } else if (r < cfg_.homophone_rate + cfg_.near_rate) {
      top_entity = near_of(g, gold);
    }

    const Sentence ref = fill(tmpl, gold, words[0], words[1]);
    const Sentence top = fill(tmpl, top_entity, words[0], words[1]);

    Utterance utt;
    char id[32];
    std::snprintf(id, sizeof id, "syn%04zu", index);
    utt.utt_id = id;
    utt.ref = utf8_encode(ref.text);
    utt.ne_spans = {ref.entity};

    double score = -rng_.uniform(0.5, 2.0);
    utt.nbest.hypotheses.push_back({utf8_encode(top.text), score});
    for (std::size_t n = 1; n < cfg_.nbest; ++n) {
      const double v = rng_.unit();
      const std::u32string variant = v < 0.3 ? gold : (v < 0.8 ? homophone_of(g, gold) : near_of(g, gold));
      std::u32string text = fill(tmpl, variant, words[0], words[1]).text;
      if (rng_.chance(0.2)) text.erase(0, 1);
      score -= rng_.uniform(0.2, 1.0);
      utt.nbest.hypotheses.push_back({utf8_encode(text), score});
    }

    std::vector<Range> ced;
    if (top_entity != gold || rng_.chance(cfg_.flag_correct_rate)) ced.push_back(top.entity);
    if (rng_.chance(cfg_.spurious_rate)) ced.push_back(top.word_a);
    std::sort(ced.begin(), ced.end(), [](const Range& a, const Range& b) { return a.start < b.start; });
    utt.ced_spans = std::move(ced);
    return utt;
  }

  void make_training(std::vector<Utterance>& out) {
    std::size_t index = 0;
    for (const auto& g : groups_) {
      for (std::size_t m = 0; m < g.members.size(); ++m) {
        const double r = rng_.unit();
        const std::size_t shots = r < 0.3 ? 0 : (r < 0.7 ? 1 + rng_.index(5) : 6 + rng_.index(15));
        const auto& topic = topics()[g.member_topics[m]];
        for (std::size_t k = 0; k < shots; ++k) {
          auto words = topic.words;
          rng_.shuffle(words);
          const Sentence s = fill(rng_.pick(templates()), g.members[m], words[0], words[1]);
          Utterance utt;
          char id[32];
          std::snprintf(id, sizeof id, "train%05zu", index++);
          utt.utt_id = id;
          utt.nbest.hypotheses.push_back({utf8_encode(s.text), 0.0});
          utt.ref = utf8_encode(s.text);
          utt.ne_spans = {s.entity};
          out.push_back(std::move(utt));
        }
      }
    }
  }

  std::shared_ptr<const PronunciationLexicon> lex_;
  SyntheticConfig cfg_;
  Rng rng_;
  std::map<std::string, std::vector<char32_t>> by_syllable_;
  std::vector<std::string> syllables_;
  std::vector<Group> groups_;
  std::set<std::u32string> taken_;
};

void write_catalog(const EntityCatalog& catalog, const std::filesystem::path& nelist, const std::filesystem::path& desc) {
  std::ofstream names(nelist);
  std::ofstream descriptions(desc);
  if (!names || !descriptions) throw std::runtime_error("cannot write catalog files under " + nelist.parent_path().string());
  for (const auto& e : catalog.entities()) {
    names << e.surface << '\n';
    if (const auto* d = catalog.description(e.id)) {
      descriptions << nlohmann::json{{"entity", e.surface}, {"description", *d}}.dump() << '\n';
    }
  }
}

}  // namespace

SyntheticData generate_synthetic(std::shared_ptr<const PronunciationLexicon> lex, const SyntheticConfig& cfg) {
  return Generator(std::move(lex), cfg).run();
}

void write_synthetic(const SyntheticData& data, const std::string& dir) {
  const std::filesystem::path root(dir);
  std::filesystem::create_directories(root);
  write_catalog(data.catalog, root / "nelist.txt", root / "descriptions.jsonl");
  write_catalog(data.pool, root / "pool_nelist.txt", root / "pool_descriptions.jsonl");
  std::ofstream corpus(root / "nbest.jsonl");
  write_corpus(data.corpus, corpus);
  std::ofstream training(root / "train.jsonl");
  write_corpus(data.training, training);
  if (!corpus || !training) throw std::runtime_error("cannot write corpus files under " + dir);
}

}  // namespace dancer
