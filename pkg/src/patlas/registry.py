"""Shipped country-code registry.

A static copy of the ISO 3166-1 alpha-2 assignments plus the EU-27
membership set used for the "EU" pseudo-country aggregate. Shipping the
registry keeps validation deterministic and offline.
"""

from __future__ import annotations

ISO_ALPHA2: frozenset[str] = frozenset(
    """
    AD AE AF AG AI AL AM AO AQ AR AS AT AU AW AX AZ
    BA BB BD BE BF BG BH BI BJ BL BM BN BO BQ BR BS BT BV BW BY BZ
    CA CC CD CF CG CH CI CK CL CM CN CO CR CU CV CW CX CY CZ
    DE DJ DK DM DO DZ
    EC EE EG EH ER ES ET
    FI FJ FK FM FO FR
    GA GB GD GE GF GG GH GI GL GM GN GP GQ GR GS GT GU GW GY
    HK HM HN HR HT HU
    ID IE IL IM IN IO IQ IR IS IT
    JE JM JO JP
    KE KG KH KI KM KN KP KR KW KY KZ
    LA LB LC LI LK LR LS LT LU LV LY
    MA MC MD ME MF MG MH MK ML MM MN MO MP MQ MR MS MT MU MV MW MX MY MZ
    NA NC NE NF NG NI NL NO NP NR NU NZ
    OM
    PA PE PF PG PH PK PL PM PN PR PS PT PW PY
    QA
    RE RO RS RU RW
    SA SB SC SD SE SG SH SI SJ SK SL SM SN SO SR SS ST SV SX SY SZ
    TC TD TF TG TH TJ TK TL TM TN TO TR TT TV TW TZ
    UA UG UM US UY UZ
    VA VC VE VG VI VN VU
    WF WS
    YE YT
    ZA ZM ZW
    """.split()
)

# Static EU-27 composition (post-2020). Membership is not dated; callers
# may supply any member set where a narrower view is needed.
EU27: frozenset[str] = frozenset(
    """
    AT BE BG CY CZ DE DK EE ES FI FR GR HR HU IE IT
    LT LU LV MT NL PL PT RO SE SI SK
    """.split()
)

#: Label of the aggregate pseudo-country produced by EU aggregation.
EU_PSEUDO = "EU"


def is_country(code: str) -> bool:
    """True if ``code`` is an assigned ISO 3166-1 alpha-2 code."""
    return code in ISO_ALPHA2


def is_recognized(code: str) -> bool:
    """True for assigned alpha-2 codes and the EU pseudo-country."""
    return code in ISO_ALPHA2 or code == EU_PSEUDO


def load_members(path) -> frozenset[str]:
    """Read a member list (one code per line, '#' comments allowed)."""
    members = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            code = line.split("#", 1)[0].strip().upper()
            if code:
                members.append(code)
    return frozenset(members)
