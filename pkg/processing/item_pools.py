"""
Pools d'éléments intégrés, centralisés ici pour tous les scripts de génération.
Les listes sont figées : modifier un pool change toutes les séquences générées pour une graine donnée.
"""

LETTERS = [chr(code) for code in range(ord("A"), ord("Z") + 1)]

DIGITS = [str(value) for value in range(100)]

ANIMALS = [
    "dog", "cat", "horse", "cow", "sheep", "goat", "pig", "rabbit", "mouse", "rat",
    "lion", "tiger", "leopard", "cheetah", "jaguar", "wolf", "fox", "bear", "panda", "koala",
    "kangaroo", "zebra", "giraffe", "elephant", "rhino", "hippo", "camel", "llama", "alpaca", "deer",
    "moose", "elk", "bison", "buffalo", "otter", "beaver", "badger", "hedgehog", "squirrel", "chipmunk",
    "bat", "monkey", "gorilla", "chimpanzee", "lemur", "sloth", "armadillo", "anteater", "walrus", "seal",
    "dolphin", "whale", "shark", "octopus", "squid", "crab", "lobster", "eagle", "owl", "parrot",
    "penguin", "flamingo", "swan", "duck", "goose", "turkey", "peacock", "crow", "sparrow", "falcon",
]

FRUITS = [
    "apple", "apricot", "avocado", "banana", "blackberry", "blackcurrant", "blueberry", "boysenberry", "cantaloupe", "cherry",
    "clementine", "coconut", "cranberry", "currant", "damson", "date", "dragonfruit", "durian", "elderberry", "feijoa",
    "fig", "gooseberry", "grape", "grapefruit", "guava", "honeydew", "huckleberry", "jackfruit", "jujube", "kiwi",
    "kumquat", "lemon", "lime", "loganberry", "longan", "loquat", "lychee", "mandarin", "mango", "mangosteen",
    "mulberry", "nectarine", "olive", "orange", "papaya", "passionfruit", "peach", "pear", "persimmon", "pineapple",
    "plantain", "plum", "pomegranate", "pomelo", "quince", "raisin", "rambutan", "raspberry", "redcurrant", "salak",
    "satsuma", "soursop", "starfruit", "strawberry", "tamarind", "tangerine", "watermelon", "yuzu",
]

CITIES = [
    "Paris", "London", "Berlin", "Madrid", "Rome", "Lisbon", "Vienna", "Prague", "Warsaw", "Budapest",
    "Athens", "Dublin", "Oslo", "Stockholm", "Helsinki", "Copenhagen", "Amsterdam", "Brussels", "Zurich", "Geneva",
    "Lyon", "Marseille", "Toulouse", "Bordeaux", "Lille", "Nantes", "Munich", "Hamburg", "Milan", "Naples",
    "Barcelona", "Seville", "Porto", "Krakow", "Istanbul", "Cairo", "Nairobi", "Lagos", "Casablanca", "Tunis",
    "Tokyo", "Osaka", "Kyoto", "Seoul", "Beijing", "Shanghai", "Bangkok", "Hanoi", "Singapore", "Jakarta",
    "Manila", "Mumbai", "Delhi", "Karachi", "Dubai", "Tehran", "Sydney", "Melbourne", "Auckland", "Toronto",
    "Montreal", "Vancouver", "Chicago", "Boston", "Seattle", "Denver", "Houston", "Miami", "Lima", "Bogota",
    "Santiago", "Quito", "Havana",
]

ELEMENTS = [
    "hydrogen", "helium", "lithium", "beryllium", "boron", "carbon", "nitrogen", "oxygen", "fluorine", "neon",
    "sodium", "magnesium", "aluminium", "silicon", "phosphorus", "sulfur", "chlorine", "argon", "potassium", "calcium",
    "scandium", "titanium", "vanadium", "chromium", "manganese", "iron", "cobalt", "nickel", "copper", "zinc",
    "gallium", "germanium", "arsenic", "selenium", "bromine", "krypton", "rubidium", "strontium", "yttrium", "zirconium",
    "niobium", "molybdenum", "technetium", "ruthenium", "rhodium", "palladium", "silver", "cadmium", "indium", "tin",
    "antimony", "tellurium", "iodine", "xenon", "caesium", "barium", "lanthanum", "cerium", "tungsten", "platinum",
    "gold", "mercury", "lead", "bismuth", "radon", "radium", "uranium", "plutonium",
]

LANGUAGES = [
    "English", "French", "German", "Spanish", "Italian", "Portuguese", "Dutch", "Swedish", "Norwegian", "Danish",
    "Finnish", "Icelandic", "Polish", "Czech", "Slovak", "Hungarian", "Romanian", "Bulgarian", "Greek", "Turkish",
    "Russian", "Ukrainian", "Serbian", "Croatian", "Slovenian", "Albanian", "Lithuanian", "Latvian", "Estonian", "Irish",
    "Welsh", "Basque", "Catalan", "Galician", "Maltese", "Arabic", "Hebrew", "Persian", "Kurdish", "Armenian",
    "Georgian", "Hindi", "Bengali", "Urdu", "Punjabi", "Tamil", "Telugu", "Marathi", "Nepali", "Sinhala",
    "Mandarin", "Cantonese", "Japanese", "Korean", "Vietnamese", "Thai", "Khmer", "Malay", "Tagalog", "Swahili",
    "Amharic", "Yoruba", "Zulu", "Hausa", "Somali", "Quechua", "Mongolian", "Kazakh",
]

INSTRUMENTS = [
    "piano", "violin", "viola", "cello", "double bass", "harp", "guitar", "banjo", "mandolin", "ukulele",
    "lute", "sitar", "flute", "piccolo", "oboe", "clarinet", "bassoon", "saxophone", "trumpet", "trombone",
    "tuba", "French horn", "cornet", "bugle", "euphonium", "harmonica", "accordion", "bagpipes", "organ", "harpsichord",
    "synthesizer", "drums", "snare drum", "timpani", "xylophone", "marimba", "vibraphone", "glockenspiel", "cymbal", "tambourine",
    "triangle", "castanets", "maracas", "bongo", "conga", "djembe", "tabla", "gong", "celesta", "zither",
    "dulcimer", "balalaika", "bouzouki", "recorder", "ocarina", "didgeridoo", "kazoo", "theremin", "melodica", "shamisen",
    "koto", "erhu", "bandoneon", "lyre", "cowbell", "steelpan",
]

BUILTIN_POOLS = {
    "letters": LETTERS,
    "digits": DIGITS,
    "animals": ANIMALS,
    "fruits": FRUITS,
    "cities": CITIES,
    "elements": ELEMENTS,
    "languages": LANGUAGES,
    "instruments": INSTRUMENTS,
}

# nature des éléments de chaque pool (les chiffres ne sont ni des lettres ni des mots)
POOL_ITEM_KINDS = {
    "letters": "letter",
    "digits": "generic",
    "animals": "word",
    "fruits": "word",
    "cities": "word",
    "elements": "word",
    "languages": "word",
    "instruments": "word",
}
