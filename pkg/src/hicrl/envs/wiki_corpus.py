"""Hand-authored fictional encyclopedia and two-hop questions for MiniWiki.

Every fact is invented. Sentences end with a period and avoid abbreviations
so that sentence splitting stays trivial.
"""

from __future__ import annotations

ARTICLES: dict[str, str] = {
    "Marrow Bridge": (
        "The Marrow Bridge is a stone arch bridge over the Marrow River. It was designed by the engineer Ilse Varga. "
        "Construction finished in 1889. The bridge carries a single road lane and a footpath. "
        "It was restored in 1994 after flood damage."
    ),
    "Ilse Varga": (
        "Ilse Varga was a civil engineer known for masonry bridges. She was born in 1858 in the town of Tollen. "
        "She studied engineering at Tarn University. Her other works include the Sable Viaduct. She died in 1921."
    ),
    "Tollen": (
        "Tollen is a market town on the eastern bank of the Marrow River. It is known for its wool market. "
        "The town is overlooked by Tollen Castle. Its population is about nine thousand."
    ),
    "Marrow River": (
        "The Marrow River flows from the Grey Fells to Lake Oster. It is 140 kilometres long. "
        "The towns of Tollen and Brisk lie on its banks. The river is crossed by the Marrow Bridge."
    ),
    "Tollen Castle": (
        "Tollen Castle is a ruined keep above the town of Tollen. It was built by the Count of Aurel in 1210. "
        "The castle was abandoned after a fire in 1660. Its gatehouse still stands."
    ),
    "Glass Orchard": (
        "Glass Orchard is a novel published in 1931. It was written by Peter Aldane. "
        "The novel follows a family of fruit growers during a long drought. It won the Halberd Prize in 1932. "
        "It was first printed by Marle and Dane."
    ),
    "Peter Aldane": (
        "Peter Aldane was a novelist and essayist. He was educated at Kessing College. "
        "He wrote Glass Orchard and The Salt Road. He spent his later years in the port of Wendmouth."
    ),
    "Kessing College": (
        "Kessing College is a residential college in the city of Harl. It was founded in 1744. "
        "The college is known for its library of maritime charts. Its emblem is a silver heron."
    ),
    "The Ninth Lantern": (
        "The Ninth Lantern is a film released in 1958. It was directed by Mara Okonjo. "
        "The film is set in a lighthouse during a winter storm. It was shot on the island of Fenn."
    ),
    "Mara Okonjo": (
        "Mara Okonjo is a film director and screenwriter. She was born in 1927 in the city of Harl. "
        "Her first feature was The Ninth Lantern. In 1962 she received the Golden Reel award."
    ),
    "Lake Oster": (
        "Lake Oster is a freshwater lake at the mouth of the Marrow River. It has a surface area of 48 square kilometres. "
        "Its greatest depth is 62 metres. The lake freezes in most winters."
    ),
    "Lake Vimmel": (
        "Lake Vimmel is a glacial lake in the Grey Fells. It has a surface area of 31 square kilometres. "
        "Its greatest depth is 110 metres. The lake is the source of the Vimmel Stream."
    ),
    "Tarn University": (
        "Tarn University is a public university in the town of Tarnby. It was founded in 1802. "
        "It is known for its schools of engineering and geology. Ilse Varga was among its early graduates."
    ),
    "Emil Sorensen": (
        "Emil Sorensen was a painter of coastal landscapes. He was born in 1871 in Wendmouth. "
        "His best known work is The Salt Flats at Dawn. He taught at the Harl Academy of Art."
    ),
    "Wendmouth": (
        "Wendmouth is a port city on the Grey Sea. It grew around a herring fishery. "
        "The city hosts the annual Lantern Regatta. Its harbour lighthouse was built in 1840."
    ),
    "The Salt Road": (
        "The Salt Road is a novel published in 1938. It was written by Peter Aldane. "
        "It describes a journey across the salt marshes south of Wendmouth."
    ),
    "Sable Viaduct": (
        "The Sable Viaduct is a railway viaduct crossing the Sable Gorge. It was designed by Ilse Varga. "
        "It opened in 1901. The viaduct has fourteen arches."
    ),
    "Harbour Suite": (
        "Harbour Suite is the second studio album by The Gullwings. It was released in 1974. "
        "It was recorded in Wendmouth over six weeks."
    ),
    "The Gullwings": (
        "The Gullwings were a folk rock band formed in Wendmouth in 1969. The band was fronted by the singer Nora Quell. "
        "They released five studio albums. The band split up in 1981."
    ),
    "Fenn": (
        "Fenn is a small island in the Grey Sea. Its only village is Port Aske. "
        "The island has a population of about four hundred. A ferry links it to Wendmouth twice a day."
    ),
    "Halberd Prize": (
        "The Halberd Prize is an annual literary award for fiction. It was established in 1920 by Oswin Marle. "
        "The winner receives a bronze halberd. Glass Orchard won the prize in 1932."
    ),
    "Oswin Marle": (
        "Oswin Marle was a publisher and book collector. He founded the Marle and Dane publishing house in Harl. "
        "He established the Halberd Prize in 1920. He died in 1949."
    ),
    "Copper Crown": (
        "The Copper Crown was a three-masted merchant ship. She was launched in 1851 at Wendmouth. "
        "Her first captain was Hesper Lund. She was wrecked off the island of Fenn in 1867."
    ),
    "Hesper Lund": (
        "Hesper Lund was a sea captain and explorer. He was born in the river port of Brisk. "
        "He commanded the Copper Crown on her early voyages. He later charted the coast of the Amber Isles."
    ),
    "Vimmel Suite": (
        "The Vimmel Suite is an orchestral work in four movements. It was composed by Dagny Rask in 1912. "
        "Each movement depicts a season on Lake Vimmel."
    ),
    "Dagny Rask": (
        "Dagny Rask was a composer and performer. She was born in Tarnby in 1880. Her instrument was the cello. "
        "She played with the Harl Symphony Orchestra for twenty years. Her works include the Vimmel Suite."
    ),
    "Harl Rovers": (
        "Harl Rovers is a football club based in the city of Harl. The club was founded in 1883. "
        "Its home ground is Quayside Park. The team plays in green shirts."
    ),
    "Quayside Park": (
        "Quayside Park is a football stadium beside the docks of Harl. It was opened in 1908. "
        "It holds about eighteen thousand spectators."
    ),
    "Marle and Dane": (
        "Marle and Dane is a publishing house in the city of Harl. It was founded in 1902 by Oswin Marle and Ruth Dane. "
        "It publishes fiction and travel writing."
    ),
    "Sable River": (
        "The Sable River rises on the southern slopes of the Grey Fells. It is 95 kilometres long. "
        "It cuts through the Sable Gorge before reaching the Grey Sea."
    ),
    "Grey Fells": (
        "The Grey Fells are a range of low mountains. Their highest summit is Mount Corrin. "
        "Lake Vimmel lies in a high valley of the range. Both the Marrow River and the Sable River rise there."
    ),
    "Harl": (
        "Harl is the largest city of the region. It lies at the head of a deep estuary. "
        "The city is home to Kessing College and the Harl Academy of Art. Its football club is Harl Rovers."
    ),
    "Grey Sea": (
        "The Grey Sea is a shallow northern sea. Its largest port is Wendmouth. "
        "The island of Fenn lies near its western shore."
    ),
    "Brisk": (
        "Brisk is a river port on the Marrow River. It grew around an ironworks founded in 1790. "
        "The explorer Hesper Lund was born there."
    ),
    "Tarnby": (
        "Tarnby is a university town in the foothills of the Grey Fells. It is the seat of Tarn University. "
        "The composer Dagny Rask was born there."
    ),
    "Port Aske": (
        "Port Aske is the only village on the island of Fenn. It has a small harbour and a lifeboat station."
    ),
    "Sable Gorge": (
        "The Sable Gorge is a limestone canyon cut by the Sable River. It is crossed by the Sable Viaduct."
    ),
    "Amber Isles": (
        "The Amber Isles are a chain of uninhabited islands. Their coast was first charted by Hesper Lund."
    ),
    "Harl Symphony Orchestra": (
        "The Harl Symphony Orchestra is the principal orchestra of the city of Harl. It was founded in 1867. "
        "It gave the first performance of the Vimmel Suite."
    ),
    "Harl Academy of Art": (
        "The Harl Academy of Art is an art school in the city of Harl. It was founded in 1850. "
        "The painter Emil Sorensen taught there."
    ),
    "The Salt Flats at Dawn": (
        "The Salt Flats at Dawn is an oil painting by Emil Sorensen. It was completed in 1904. "
        "It hangs in the Wendmouth Gallery."
    ),
    "Lantern Regatta": (
        "The Lantern Regatta is an annual sailing race held in Wendmouth. Boats carry lanterns after dark."
    ),
    "Golden Reel": (
        "The Golden Reel is an award for film directing. It was first presented in 1950."
    ),
    "Nora Quell": (
        "Nora Quell is a singer and songwriter. She fronted the band The Gullwings. She later recorded three solo albums."
    ),
    "Ruth Dane": (
        "Ruth Dane was a translator and editor. She co-founded the Marle and Dane publishing house."
    ),
    "Count of Aurel": (
        "The Count of Aurel was the title of the rulers of the county of Aurel. The first count built Tollen Castle."
    ),
    "Aurel": (
        "Aurel is a historical county that included the town of Tollen. It was absorbed into the kingdom in 1540."
    ),
    "Vimmel Stream": (
        "The Vimmel Stream flows out of Lake Vimmel. It joins the Marrow River above Tollen."
    ),
    "Mount Corrin": (
        "Mount Corrin is the highest summit of the Grey Fells. It rises to 1204 metres."
    ),
    "Wendmouth Gallery": (
        "The Wendmouth Gallery is an art museum in Wendmouth. It holds many works by Emil Sorensen."
    ),
    "Fenn Lighthouse": (
        "Fenn Lighthouse stands on the northern cape of Fenn. It was built in 1872 after the loss of several ships."
    ),
    "Marrow Valley Railway": (
        "The Marrow Valley Railway runs from Harl to Tollen. It opened in 1879."
    ),
    "Tollen Wool Market": (
        "The Tollen Wool Market is held each autumn in Tollen. It dates back to the fourteenth century."
    ),
    "Heron Gate": (
        "Heron Gate is the main entrance of Kessing College. It is decorated with a carved silver heron."
    ),
    "Tarn Observatory": (
        "Tarn Observatory is an astronomical observatory run by Tarn University. It was built in 1865."
    ),
    "Oster Ferry": (
        "The Oster Ferry crosses Lake Oster in summer. It carries passengers between two lakeside villages."
    ),
    "Sable Railway": (
        "The Sable Railway is a mountain line through the Sable Gorge. It crosses the gorge on the Sable Viaduct."
    ),
    "Salt Marsh": (
        "The salt marshes south of Wendmouth are a wetland reserve. They appear in the novel The Salt Road."
    ),
    "Brisk Ironworks": (
        "The Brisk Ironworks was founded in 1790. It made rails for the Marrow Valley Railway."
    ),
    "Port Aske Lifeboat": (
        "The Port Aske Lifeboat station was opened in 1868. Its crews rescued sailors off the coast of Fenn."
    ),
}

# (question, answer, task type, oracle segments)
QUESTIONS: tuple[tuple[str, str, str, tuple[tuple[str, tuple[str, ...]], ...]], ...] = (
    ("In which town was the designer of the Marrow Bridge born?", "Tollen", "bridge", (
        ("find who designed the Marrow Bridge", ("search[Marrow Bridge]",)),
        ("find where Ilse Varga was born", ("search[Ilse Varga]",)),
        ("answer with the town", ("finish[Tollen]",)))),
    ("Which college did the author of Glass Orchard attend?", "Kessing College", "bridge", (
        ("find who wrote Glass Orchard", ("search[Glass Orchard]",)),
        ("find where Peter Aldane was educated", ("search[Peter Aldane]",)),
        ("answer with the college", ("finish[Kessing College]",)))),
    ("In what year did the director of The Ninth Lantern receive the Golden Reel award?", "1962", "bridge", (
        ("find who directed The Ninth Lantern", ("search[The Ninth Lantern]",)),
        ("find when Mara Okonjo received the Golden Reel", ("search[Mara Okonjo]", "lookup[Golden Reel]")),
        ("answer with the year", ("finish[1962]",)))),
    ("Which is deeper, Lake Oster or Lake Vimmel?", "Lake Vimmel", "comparison", (
        ("find the depth of Lake Oster", ("search[Lake Oster]", "lookup[depth]")),
        ("find the depth of Lake Vimmel", ("search[Lake Vimmel]", "lookup[depth]")),
        ("answer with the deeper lake", ("finish[Lake Vimmel]",)))),
    ("Who was the lead singer of the band that recorded Harbour Suite?", "Nora Quell", "bridge", (
        ("find which band recorded Harbour Suite", ("search[Harbour Suite]",)),
        ("find who fronted The Gullwings", ("search[The Gullwings]",)),
        ("answer with the singer", ("finish[Nora Quell]",)))),
    ("Which was founded earlier, Kessing College or Tarn University?", "Kessing College", "comparison", (
        ("find when Kessing College was founded", ("search[Kessing College]",)),
        ("find when Tarn University was founded", ("search[Tarn University]",)),
        ("answer with the older institution", ("finish[Kessing College]",)))),
    ("In which sea lies the island where The Ninth Lantern was shot?", "Grey Sea", "bridge", (
        ("find where The Ninth Lantern was shot", ("search[The Ninth Lantern]", "lookup[shot]")),
        ("find which sea Fenn lies in", ("search[Fenn]",)),
        ("answer with the sea", ("finish[Grey Sea]",)))),
    ("Who was born earlier, Ilse Varga or Emil Sorensen?", "Ilse Varga", "comparison", (
        ("find when Ilse Varga was born", ("search[Ilse Varga]",)),
        ("find when Emil Sorensen was born", ("search[Emil Sorensen]",)),
        ("answer with the older person", ("finish[Ilse Varga]",)))),
    ("What was the profession of the founder of the Halberd Prize?", "publisher", "bridge", (
        ("find who established the Halberd Prize", ("search[Halberd Prize]",)),
        ("find the profession of Oswin Marle", ("search[Oswin Marle]",)),
        ("answer with the profession", ("finish[publisher]",)))),
    ("In which city is the college that Peter Aldane attended?", "Harl", "bridge", (
        ("find which college Peter Aldane attended", ("search[Peter Aldane]",)),
        ("find where Kessing College is", ("search[Kessing College]",)),
        ("answer with the city", ("finish[Harl]",)))),
    ("In which port was the first captain of the Copper Crown born?", "Brisk", "bridge", (
        ("find the first captain of the Copper Crown", ("search[Copper Crown]",)),
        ("find where Hesper Lund was born", ("search[Hesper Lund]",)),
        ("answer with the port", ("finish[Brisk]",)))),
    ("What instrument did the composer of the Vimmel Suite play?", "cello", "bridge", (
        ("find who composed the Vimmel Suite", ("search[Vimmel Suite]",)),
        ("find the instrument of Dagny Rask", ("search[Dagny Rask]", "lookup[instrument]")),
        ("answer with the instrument", ("finish[cello]",)))),
    ("Which mountain range contains the lake depicted in the Vimmel Suite?", "Grey Fells", "bridge", (
        ("find which lake the Vimmel Suite depicts", ("search[Vimmel Suite]",)),
        ("find where Lake Vimmel lies", ("search[Lake Vimmel]",)),
        ("answer with the range", ("finish[Grey Fells]",)))),
    ("In what year was the home ground of Harl Rovers opened?", "1908", "bridge", (
        ("find the home ground of Harl Rovers", ("search[Harl Rovers]",)),
        ("find when Quayside Park opened", ("search[Quayside Park]",)),
        ("answer with the year", ("finish[1908]",)))),
    ("In what year was the first printer of Glass Orchard founded?", "1902", "bridge", (
        ("find who first printed Glass Orchard", ("search[Glass Orchard]", "lookup[printed]")),
        ("find when Marle and Dane was founded", ("search[Marle and Dane]",)),
        ("answer with the year", ("finish[1902]",)))),
    ("What is the only village on the island where the Copper Crown was wrecked?", "Port Aske", "bridge", (
        ("find where the Copper Crown was wrecked", ("search[Copper Crown]", "lookup[wrecked]")),
        ("find the village on Fenn", ("search[Fenn]",)),
        ("answer with the village", ("finish[Port Aske]",)))),
    ("Which university did the designer of the Sable Viaduct attend?", "Tarn University", "bridge", (
        ("find who designed the Sable Viaduct", ("search[Sable Viaduct]",)),
        ("find where Ilse Varga studied", ("search[Ilse Varga]",)),
        ("answer with the university", ("finish[Tarn University]",)))),
    ("Which is longer, the Marrow River or the Sable River?", "Marrow River", "comparison", (
        ("find the length of the Marrow River", ("search[Marrow River]",)),
        ("find the length of the Sable River", ("search[Sable River]",)),
        ("answer with the longer river", ("finish[Marrow River]",)))),
    ("Which was published first, Glass Orchard or The Salt Road?", "Glass Orchard", "comparison", (
        ("find when Glass Orchard was published", ("search[Glass Orchard]",)),
        ("find when The Salt Road was published", ("search[The Salt Road]",)),
        ("answer with the earlier novel", ("finish[Glass Orchard]",)))),
    ("Which opened first, the Sable Viaduct or Quayside Park?", "Sable Viaduct", "comparison", (
        ("find when the Sable Viaduct opened", ("search[Sable Viaduct]",)),
        ("find when Quayside Park opened", ("search[Quayside Park]",)),
        ("answer with the earlier structure", ("finish[Sable Viaduct]",)))),
)
