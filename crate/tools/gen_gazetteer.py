#!/usr/bin/env python3
"""Regenerate crates/core/data/gazetteer.tsv.

Sources: the public-domain tzdata tables iso3166.tab (country names) and
zone.tab (one representative city per zone), plus the curated aliases below.
Curated rows come first; the loader keeps the first code seen for a name.

    tools/gen_gazetteer.py /usr/share/zoneinfo > crates/core/data/gazetteer.tsv
"""
import os
import re
import sys

# Curated names. Order matters only for duplicate names (first wins).
CURATED = """
united states	US
united states of america	US
usa	US
u s a	US
us	US
u s	US
america	US
estados unidos	US
etats unis	US
alabama	US
alaska	US
arizona	US
arkansas	US
california	US
colorado	US
connecticut	US
delaware	US
florida	US
georgia usa	US
hawaii	US
idaho	US
illinois	US
indiana	US
iowa	US
kansas	US
kentucky	US
louisiana	US
maine	US
maryland	US
massachusetts	US
michigan	US
minnesota	US
mississippi	US
missouri	US
montana	US
nebraska	US
nevada	US
new hampshire	US
new jersey	US
new mexico	US
new york	US
north carolina	US
north dakota	US
ohio	US
oklahoma	US
oregon	US
pennsylvania	US
rhode island	US
south carolina	US
south dakota	US
tennessee	US
texas	US
utah	US
vermont	US
virginia	US
washington	US
west virginia	US
wisconsin	US
wyoming	US
district of columbia	US
washington dc	US
dc	US
ak	US
az	US
ar	US
ca	US
ct	US
fl	US
fla	US
ga	US
il	US
ia	US
ks	US
ky	US
la	US
md	US
mi	US
mn	US
ms	US
mt	US
nv	US
nh	US
nj	US
nm	US
ny	US
nyc	US
nc	US
nd	US
pa	US
ri	US
sc	US
sd	US
tn	US
tx	US
ut	US
vt	US
va	US
wa	US
wv	US
wi	US
wy	US
miami	US
miami beach	US
orlando	US
tampa	US
tampa bay	US
jacksonville	US
tallahassee	US
fort lauderdale	US
ft lauderdale	US
west palm beach	US
palm beach	US
naples	US
fort myers	US
key west	US
florida keys	US
gainesville	US
sarasota	US
st petersburg	US
saint petersburg fl	US
daytona beach	US
pensacola	US
boca raton	US
atlanta	US
savannah	US
charleston	US
houston	US
dallas	US
austin	US
san antonio	US
los angeles	US
san francisco	US
san diego	US
seattle	US
portland	US
boston	US
philadelphia	US
pittsburgh	US
baltimore	US
brooklyn	US
manhattan	US
queens	US
bronx	US
new orleans	US
nashville	US
memphis	US
charlotte	US
raleigh	US
las vegas	US
salt lake city	US
minneapolis	US
st louis	US
kansas city	US
cleveland	US
columbus	US
cincinnati	US
milwaukee	US
san jose	US
oakland	US
sacramento	US
honolulu	US
albuquerque	US
tucson	US
oklahoma city	US
richmond	US
virginia beach	US
birmingham al	US
london	GB
manchester	GB
liverpool	GB
birmingham	GB
leeds	GB
glasgow	GB
edinburgh	GB
cardiff	GB
belfast	GB
bristol	GB
england	GB
scotland	GB
wales	GB
northern ireland	GB
uk	GB
u k	GB
great britain	GB
britain	GB
united kingdom	GB
paris	FR
ile de france	FR
marseille	FR
lyon	FR
toulouse	FR
nantes	FR
strasbourg	FR
montpellier	FR
bordeaux	FR
lille	FR
rennes	FR
reims	FR
grenoble	FR
saint denis	FR
france	FR
republique francaise	FR
toronto	CA
montreal	CA
vancouver	CA
ottawa	CA
calgary	CA
edmonton	CA
quebec	CA
ontario	CA
british columbia	CA
alberta	CA
manitoba	CA
nova scotia	CA
mexico city	MX
ciudad de mexico	MX
cdmx	MX
guadalajara	MX
monterrey	MX
cancun	MX
madrid	ES
barcelona	ES
espana	ES
roma	IT
rome	IT
milano	IT
milan	IT
italia	IT
berlin	DE
munich	DE
munchen	DE
hamburg	DE
frankfurt	DE
cologne	DE
koln	DE
deutschland	DE
brussels	BE
bruxelles	BE
belgique	BE
amsterdam	NL
rotterdam	NL
holland	NL
the netherlands	NL
geneve	CH
geneva	CH
zurich	CH
suisse	CH
lisboa	PT
lisbon	PT
dublin	IE
sydney	AU
melbourne	AU
brisbane	AU
perth	AU
mumbai	IN
new delhi	IN
delhi	IN
bangalore	IN
bengaluru	IN
chennai	IN
hyderabad	IN
kolkata	IN
karachi	PK
lahore	PK
islamabad	PK
dhaka	BD
manila	PH
jakarta	ID
tokyo	JP
osaka	JP
nippon	JP
seoul	KR
south korea	KR
korea	KR
north korea	KP
beijing	CN
shanghai	CN
hong kong	HK
singapore	SG
bangkok	TH
kuala lumpur	MY
dubai	AE
abu dhabi	AE
uae	AE
riyadh	SA
jeddah	SA
cairo	EG
lagos	NG
abuja	NG
nairobi	KE
johannesburg	ZA
cape town	ZA
istanbul	TR
ankara	TR
turkiye	TR
moscow	RU
saint petersburg	RU
brasil	BR
rio de janeiro	BR
sao paulo	BR
buenos aires	AR
santiago de chile	CL
bogota	CO
lima	PE
caracas	VE
samoa	WS
congo	CG
drc	CD
democratic republic of the congo	CD
ivory coast	CI
cote d ivoire	CI
czechia	CZ
vatican	VA
vatican city	VA
puerto rico	PR
san juan	PR
ponce	PR
mayaguez	PR
bayamon	PR
carolina pr	PR
boricua	PR
borinquen	PR
cuba	CU
havana	CU
la habana	CU
habana	CU
santiago de cuba	CU
dominican republic	DO
republica dominicana	DO
rep dom	DO
rd	DO
santo domingo	DO
punta cana	DO
santiago de los caballeros	DO
haiti	HT
haiti cherie	HT
port au prince	HT
cap haitien	HT
turks and caicos	TC
turks and caicos islands	TC
turks caicos	TC
tci	TC
providenciales	TC
grand turk	TC
virgin islands	VG
virgin islands	VI
british virgin islands	VG
bvi	VG
tortola	VG
virgin gorda	VG
road town	VG
us virgin islands	VI
u s virgin islands	VI
united states virgin islands	VI
usvi	VI
st thomas	VI
saint thomas	VI
st croix	VI
saint croix	VI
st john usvi	VI
charlotte amalie	VI
anguilla	AI
the valley anguilla	AI
antigua	AG
barbuda	AG
antigua and barbuda	AG
antigua barbuda	AG
st johns antigua	AG
st kitts	KN
saint kitts	KN
nevis	KN
st kitts and nevis	KN
saint kitts and nevis	KN
basseterre	KN
saint martin	MF
st martin	MF
st martin french	MF
marigot	MF
sint maarten	SX
st maarten	SX
philipsburg	SX
saint barthelemy	BL
st barthelemy	BL
st barths	BL
st barts	BL
saint barth	BL
st barth	BL
gustavia	BL
bahamas	BS
the bahamas	BS
nassau	BS
freeport bahamas	BS
jamaica	JM
kingston jamaica	JM
barbados	BB
trinidad	TT
trinidad and tobago	TT
guadeloupe	GP
martinique	MQ
dominica	DM
montserrat	MS
bermuda	BM
cayman islands	KY
grand cayman	KY
aruba	AW
curacao	CW
"""

# zone.tab cities that read as ordinary words and would poison token fallback.
CITY_BLACKLIST = {
    "center", "easter", "wake", "christmas", "resolute", "midway", "knox",
    "marengo", "monticello", "beulah", "petersburg", "dawson", "creston",
    "vevay", "winamac", "new salem", "tell city", "swift current",
    "rainy river", "glace bay", "goose bay", "thunder bay", "cambridge bay",
    "north dakota", "indiana", "kentucky", "yukon", "pacific", "atlantic",
    "eastern", "central", "mountain", "general santos", "matamoros",
    "santa isabel", "port moresby", "chuuk", "pohnpei", "kosrae",
}

FIX_ABBREV = [
    (r"\bSt\b", "Saint"),
    (r"&", "and"),
]


def variants(name):
    out = [name]
    stripped = re.sub(r"\s*\(.*?\)", "", name).strip()
    if stripped != name:
        out.append(stripped)
        inner = re.findall(r"\((.*?)\)", name)
        for word in inner:
            out.append(f"{stripped} {word}")
    for pat, rep in FIX_ABBREV:
        for v in list(out):
            nv = re.sub(pat, rep, v)
            if nv != v:
                out.append(nv)
    return out


def main():
    zdir = sys.argv[1]
    rows = []
    for line in CURATED.strip().splitlines():
        name, code = line.split("\t")
        rows.append((name, code))

    for line in open(os.path.join(zdir, "iso3166.tab"), encoding="utf-8"):
        if line.startswith("#") or not line.strip():
            continue
        code, name = line.rstrip("\n").split("\t")
        for v in variants(name):
            rows.append((v, code))

    for line in open(os.path.join(zdir, "zone.tab"), encoding="utf-8"):
        if line.startswith("#") or not line.strip():
            continue
        code, _coords, tz = line.rstrip("\n").split("\t")[:3]
        if tz.startswith("Antarctica/"):
            continue
        city = tz.rsplit("/", 1)[-1].replace("_", " ").replace("-", " ")
        if city.lower() in CITY_BLACKLIST:
            continue
        for v in variants(city):
            rows.append((v, code))

    seen = set()
    print("# name\tcountry_code")
    print("# Offline place-name gazetteer. Curated aliases first, then tzdata")
    print("# iso3166.tab country names and zone.tab cities (public domain).")
    print("# Duplicate names are kept; the loader resolves to the first code listed.")
    for name, code in rows:
        key = (name.lower(), code)
        if key in seen:
            continue
        seen.add(key)
        print(f"{name}\t{code}")


if __name__ == "__main__":
    main()
