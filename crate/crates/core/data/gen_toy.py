# Regenerates toy_corpus.jsonl and toy_dialogues.jsonl. All content is synthetic.
import json

W = "wikipedia"; N = "news"; P = "paper_abstract"
passages = [
 (W, "The Varnholt Bridge is a suspension bridge over the Elsen River in Northern Castria. It is famous. It was completed in 1931 after six years of construction. The main span measures 412 metres and was the longest in Castria until 1958. However, the bridge was closed to heavy trucks in 1994 because of cable corrosion. A full restoration led by engineer Mira Talvik reopened it in 2009. The bridge is painted red. Each of its two towers rises 96 metres above the water and was built from steel made in the foundries of Vell, which supplied most Castrian bridges between the two wars. Tolls were abolished in 1962. Locals love it."),
 (W, "Ostrel is a coastal town in the province of Dunmar. It is quiet. The town was founded by fishermen from Kessa around 1210. Its harbour handled most of the salt trade on the Grey Coast during the 15th century. Today Ostrel has about 8,400 residents and hosts the annual Lantern Regatta every August. The old town is small. Narrow stone lanes lead from the harbour to the Church of Saint Ives, whose bell tower was rebuilt in 1788 after a great storm destroyed the original spire and much of the waterfront. Tourism now provides most local jobs. Visitors return often."),
 (W, "The marsh owl is a medium-sized owl found across the Tervan Plains. It is shy. Adults weigh between 300 and 450 grams. Unlike most owls, it hunts during the day and nests on the ground. Moreover, pairs often return to the same nesting site for several years. The species was first described by naturalist Henrik Oberlan in 1823. It eats mainly voles. During harsh winters the owls gather in loose groups of up to 30 birds in sheltered reed beds along the Tervan River, where they roost together and hunt over the frozen meadows at dawn. Its numbers are stable. Few see it."),
 (W, "Kallis is a card game for four players that originated in Southern Ebria. Each player receives 13 cards from a deck of 52. Players score points by capturing tricks that contain the queen of cups. The game became popular in Ebrian cafes during the 1880s."),
 (W, "Mount Serrat is the highest peak of the Aldane Range with an elevation of 3,912 metres. It is steep. The first recorded ascent was made in 1867 by a team led by Clara Voss. The mountain is composed mainly of granite and has three small glaciers. Additionally, its northern slopes are protected as part of Aldane National Park. Snow covers the summit all year. Climbers usually start from the village of Brenn, spend one night at the Voss Hut at 2,800 metres, and reach the top by a long ridge route that is graded as moderately difficult. Several climbers have died there. The views are good."),
 (W, "The Brannock Codex is an illuminated manuscript produced in the Abbey of Lenn around 1140. It contains the four gospels written in an early Insular script. The codex was rediscovered in 1902 in a private library in Harwick. It is now kept at the National Library of Castria."),
 (W, "Tessaline is a synthetic dye first produced by chemist Otto Rambert in 1871. It was bright. It gives wool and silk a deep violet colour. Therefore, it quickly replaced expensive plant dyes in the textile mills of Vell. Production stopped in 1930 when cheaper azo dyes appeared. The name comes from the Tessal hills. In its first decade the dye was so profitable that the Rambert works expanded to employ 2,000 workers and shipped barrels of powder to weavers in Ebria, Dunmar and the distant markets of the east. It is now rare. Few samples survive."),
 (W, "The Quill Line is a narrow-gauge railway connecting Hobb and Marrow Cove. It is slow. It opened in 1889 to carry slate from the Drennan quarries. The line is 27 kilometres long and climbs through 14 tunnels. Since 1972 it has been run by volunteers of the Quill Line Society as a heritage railway. Trains run daily in summer. The original steam locomotive Hobb Pioneer, built in 1888 by the Marrow Engine Company, still pulls the first train of every season and is maintained by a team of retired railway fitters. Tickets are cheap. Children enjoy it."),
 (W, "Lake Ulmen is a glacial lake in the Vesk Highlands. It is deep. It covers an area of 64 square kilometres and reaches a depth of 210 metres. The lake freezes completely for about three months each winter. Nevertheless, a small population of arctic char survives in its deepest basin. The water is very clear. Scientists from Vesk University have measured the temperature of the lake every week since 1951, and their records show that the ice season has become about 19 days shorter over the last seventy years. Swimming is allowed. Fish are plentiful."),
 (W, "The Kettering Prize is an annual award for achievement in experimental music. It is old. It was established in 1965 by the composer Ada Kettering. Winners receive a medal and a grant of 20,000 crowns. Past laureates include Jonas Pell and the ensemble Night Choir. The prize is awarded in Harwick. Its jury of seven musicians listens to recordings submitted from any country, and the final decision is announced each spring at a concert where the winner performs a new piece written for the occasion. Tickets sell fast. Many apply."),
 (N, "The city council of Harwick approved a new budget of 1.2 billion crowns on Tuesday. Debate was long. The plan adds 300 buses to the public fleet over the next four years. Mayor Elin Sorrow said the spending would cut commute times by a fifth. However, opposition leader Tomas Grell warned that property taxes may rise in 2026. The vote was close. The budget also sets aside 45 million crowns to repair schools in the eastern districts, where many buildings have leaking roofs and heating systems that are more than fifty years old. Residents will comment next month. Critics were loud."),
 (N, "Heavy rain flooded large parts of Ostrel on Sunday night. Emergency services evacuated 1,500 residents from the harbour district. The Elsen River rose 2.4 metres above its normal level. Officials expect the water to recede by Thursday."),
 (N, "Tech company Lumora announced on Monday that it will open a research centre in Vell. Jobs are needed. The centre will employ about 650 engineers working on battery chemistry. Chief executive Dana Quist said construction will start in March. Moreover, the company plans to partner with Vell Polytechnic on student internships. Local officials welcomed the investment as the largest in the region since 2011. Shares rose slightly. Lumora was founded in 2009 by three former university researchers and has grown into one of the largest battery makers in the country, supplying cells to electric bus manufacturers in Castria and Ebria. The site covers 12 hectares. Work starts soon."),
 (N, "The national football team of Castria beat Ebria 3-1 in a qualifying match on Saturday. It rained. Striker Paulo Inger scored twice in the first half. Castria now leads Group D with 12 points from five games. The final qualifier against Dunmar takes place in October. Fans celebrated in the streets. Coach Ivo Marren praised his defenders, who allowed only two shots on target during the whole match and kept the Ebrian forwards away from the penalty area for most of the second half. Inger leads the scoring table. The crowd was large."),
 (N, "A strike by port workers halted shipping at Marrow Cove for a third day. Talks failed. The Dockers Union demands a 9 percent wage increase. Port director Linus Abra said talks would resume on Friday. Meanwhile, about 40 cargo ships are waiting offshore. Shelves are emptying. The union says that wages at the port have fallen behind inflation for three years, while port director Abra argues that new cranes and higher fuel costs leave little room for raises this year. Both sides blame each other. Trucks are waiting."),
 (N, "Scientists at the Aldane Observatory reported the discovery of a new comet on Wednesday. It is faint. The comet, named C/2024 Tarn, will pass closest to the Sun in June. Astronomer Ruth Okafor said it may become visible to the naked eye. The observatory will livestream its observations every night. It was found by chance. A graduate student noticed the faint object while checking images taken for a survey of distant galaxies, and the discovery was confirmed two nights later by telescopes in Ebria and Dunmar. More comets may follow. Nobody expected it."),
 (N, "The Castrian central bank raised its key interest rate to 4.5 percent on Thursday. It was expected. It was the third increase this year. Governor Malik Henn said inflation remains too high at 6.1 percent. Analysts at Brask Capital expect one more increase before December. Markets were calm. The bank also said that it expects economic growth to slow to 1.1 percent next year, as higher borrowing costs reduce spending by households and investment by small businesses across the country. Mortgages will cost more. Savers are happy."),
 (N, "Firefighters contained a forest fire near Lake Ulmen after four days. The blaze burned about 1,800 hectares of pine forest. No injuries were reported. Nevertheless, 22 holiday cabins were destroyed. Investigators believe a campfire started the fire."),
 (N, "The Harwick Film Festival opened on Friday with a premiere of the drama Silent Orchard. Crowds came. Director Noor Feld attended the screening with the cast. The festival will show 140 films from 31 countries over ten days. Tickets for the closing gala sold out within an hour. The weather was warm. Among the films in competition are two debut features from Kessa and a documentary about the salt traders of the Grey Coast, which was filmed over three winters in harbour towns such as Ostrel. Prizes are announced Sunday. Stars attended."),
 (N, "Health officials in Dunmar reported 230 new cases of seasonal influenza this week. It is early. Hospitals in Kessa asked visitors to wear masks. The Ministry of Health recommends vaccination for everyone over 65. Clinics will offer free vaccines until the end of November. Schools remain open. Doctors say that this season started earlier than usual, possibly because of cold weather in October, and they urge people with fever to stay at home for at least three days to protect others. Cases may peak soon. Clinics are busy."),
 (P, "We present Sparrow, a lightweight parser for noisy social media text. It works well. Sparrow combines a character encoder with a graph-based decoder. On the Tweebank benchmark it reaches 81.4 labeled attachment score. Furthermore, it runs 3 times faster than the strongest baseline. We release code and models to support further research. Errors remain common. Most of the remaining mistakes involve long sentences with nested quotations or emoticons attached to words, which the character encoder splits in ways that confuse the decoder during attachment decisions. Results are stable. Speed is good."),
 (P, "Dense retrieval models often fail on rare entities. It helps. We propose EntityMix, a data augmentation method that swaps entity mentions between training questions. EntityMix improves recall at 20 by 6.2 points on the Rarity benchmark. The gains are largest for entities seen fewer than 5 times in training. It is simple. The swapped questions keep their original answers rewritten with the new entity, so the retriever learns to attend to the entity mention instead of memorising frequent names from the training data. Training cost does not change. Gains are small."),
 (P, "This paper studies curriculum learning for low-resource machine translation. It is fast. We order training sentences by an estimate of their difficulty computed with a small language model. Experiments on 8 language pairs from the Lorem corpus show an average gain of 1.7 BLEU. However, the benefit disappears when more than 2 million sentence pairs are available. Code is public. We further analyse which sentences are ranked as difficult and find that they tend to contain rare words, long noun phrases and idioms, which are hard to translate even for strong systems trained on large corpora. Costs are low. Results hold."),
 (P, "We introduce Halcyon, a benchmark for evaluating factual consistency in dialogue summaries. It is large. Halcyon contains 4,800 summaries annotated by trained linguists. We find that existing metrics such as ROUGE correlate poorly with human judgments of consistency. A simple entailment-based metric reaches a correlation of 0.62. Data is released. Annotators marked each summary sentence as consistent, inconsistent or unverifiable with respect to the dialogue, and agreement between annotators measured with Fleiss kappa reached 0.71 across the whole benchmark. Errors vary by domain. Quality is high."),
 (P, "Speech recognition systems degrade on accented speech. We collect Accentia, a corpus of 300 hours of read English from speakers of 17 accents. Fine-tuning on Accentia reduces word error rate by 23 percent relative. Additionally, we show that accent labels are not needed during fine-tuning."),
 (P, "Graph neural networks struggle to capture long-range dependencies. It scales. We propose Relay, a message passing scheme that adds virtual relay nodes to the input graph. Relay improves accuracy on 5 of 6 molecular property tasks. The method adds less than 10 percent to training time. Code is available. The relay nodes are connected to every node in a local neighbourhood and exchange messages in both directions, which shortens the path between distant parts of the graph without adding many new edges. Memory use grows slowly. Accuracy improves."),
 (P, "We investigate whether large language models can grade short student answers. It helps. Using 12,000 answers from the Scora dataset, we compare model grades with teacher grades. The best model agrees with teachers on 84 percent of answers. Nevertheless, agreement drops sharply for answers written in informal language. Grading is slow. Teachers who took part in the study spent on average four minutes on each answer, and they reported that the model grades were most useful as a second opinion on borderline cases rather than as a replacement. Some were sceptical. Teachers agree."),
 (P, "Reinforcement learning agents often exploit flaws in reward functions. It works. We describe Sentinel, a method that detects reward hacking by monitoring the divergence between proxy and held-out rewards. In 4 simulated environments Sentinel flags hacking within 2,000 steps. Thus, training can be stopped before the policy degrades. It is cheap. The held-out reward is computed by a separate evaluator that the agent never observes during training, and a sudden rise in the gap between the two rewards signals that the policy has found a loophole. Thresholds need tuning. Costs are low."),
 (P, "We present Tessera, a method for compressing vision transformers. Tessera prunes attention heads using a learned importance score. On ImageNet it removes 40 percent of heads with an accuracy loss below 0.5 points. Finally, we show that the pruned models transfer well to object detection."),
 (P, "Question generation models rarely ask about numbers. We build Quanta, a dataset of 9,000 numeric questions written by crowd workers. Models trained on Quanta ask more precise questions according to human raters. Moreover, they improve a downstream reading comprehension model by 2.3 F1."),
]
prefix = {W: "wiki", N: "news", P: "abs"}
counts = {W: 0, N: 0, P: 0}
rows = []
for src, text in passages:
    counts[src] += 1
    pid = f"{prefix[src]}-{counts[src]:02d}"
    rows.append({"id": pid, "text": text, "source": src, "synthetic": True})
with open("toy_corpus.jsonl", "w") as f:
    for r in rows:
        f.write(json.dumps(r) + "\n")

# Anchor dialogues: the teacher relays the first sentences in order, the
# student asks follow-ups. One dialogue per passage.
import re
def sentences(t):
    return re.split(r"(?<=[.?!]) ", t)
followups = ["Tell me more.", "What happened next?", "Interesting, go on."]
with open("toy_dialogues.jsonl", "w") as f:
    for i, r in enumerate(rows):
        s = sentences(r["text"])
        turns = []
        for k in range(min(3, len(s))):
            if k > 0:
                turns.append({"speaker": "student", "text": followups[(i + k) % 3]})
            turns.append({"speaker": "teacher", "text": s[k]})
        f.write(json.dumps({"dialogue_id": f"toy-dlg-{i+1:02d}", "passage_id": r["id"], "turns": turns}) + "\n")
