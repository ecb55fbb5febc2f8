"""Canonical 48-column feature schema shared by the extractor and the CSV loader."""
import hashlib

ID_COLUMN = "id"
LABEL_COLUMN = "CLASS_LABEL"

URL_FEATURES = (
    "NumDots",
    "SubdomainLevel",
    "PathLevel",
    "UrlLength",
    "NumDash",
    "NumDashInHostname",
    "AtSymbol",
    "TildeSymbol",
    "NumUnderscore",
    "NumPercent",
    "NumQueryComponents",
    "NumAmpersand",
    "NumHash",
    "NumNumericChars",
    "NoHttps",
    "RandomString",
    "IpAddress",
    "DomainInSubdomains",
    "DomainInPaths",
    "HttpsInHostname",
    "HostnameLength",
    "PathLength",
    "QueryLength",
    "DoubleSlashInPath",
    "NumSensitiveWords",
    "EmbeddedBrandName",
)

CONTENT_FEATURES = (
    "PctExtHyperlinks",
    "PctExtResourceUrls",
    "ExtFavicon",
    "InsecureForms",
    "RelativeFormAction",
    "ExtFormAction",
    "AbnormalFormAction",
    "PctNullSelfRedirectHyperlinks",
    "FrequentDomainNameMismatch",
    "FakeLinkInStatusBar",
    "RightClickDisabled",
    "PopUpWindow",
    "SubmitInfoToEmail",
    "IframeOrFrame",
    "MissingTitle",
    "ImagesOnlyInForm",
)

RT_FEATURES = (
    "SubdomainLevelRT",
    "UrlLengthRT",
    "PctExtResourceUrlsRT",
    "AbnormalExtFormActionR",
    "ExtMetaScriptLinkRT",
    "PctExtNullSelfRedirectHyperlinksRT",
)

FEATURE_NAMES = URL_FEATURES + CONTENT_FEATURES + RT_FEATURES
N_FEATURES = len(FEATURE_NAMES)
assert N_FEATURES == 48

PERCENT_FEATURES = ("PctExtHyperlinks", "PctExtResourceUrls", "PctNullSelfRedirectHyperlinks")


def fingerprint(names=FEATURE_NAMES) -> str:
    """SHA-256 over the ordered feature names, newline-joined."""
    return hashlib.sha256("\n".join(names).encode("utf-8")).hexdigest()


SCHEMA_FINGERPRINT = fingerprint()
