// All user-facing copy lives here, keyed and per-language, so field teams
// can retranslate without touching markup or logic.  Deployment context is
// Bangla-speaking community health workers; English is the review language.

export type Lang = "en" | "bn";

const STRINGS = {
  en: {
    title: "CKD screening",
    submit: "Assess risk",
    formIncomplete: "Answer every question to assess risk.",
    riskHeading: "Screening result",
    riskPositive: "Refer for kidney function testing",
    riskNegative: "No referral indicated",
    probabilityLabel: "Estimated CKD risk",
    thresholdNote: "Referral threshold",
    contributionsHeading: "What drove this result",
    baseValueLabel: "Baseline (before this patient's answers)",
    pushesUp: "raises the risk estimate",
    pushesDown: "lowers the risk estimate",
    whatIfHeading: "What if…",
    whatIfHint: "Change one answer to see how the risk would move.",
    whatIfDelta: "change in risk",
    unreachable: "Cannot reach the screening service.",
    retry: "Try again",
    fieldMissing: "This answer is required.",
    fieldRejected: "The service did not accept this answer.",
    loadingSchema: "Loading questions…",
    emptySchema: "The service returned no questions; screening cannot start.",
  },
  bn: {
    title: "সিকেডি স্ক্রিনিং",
    submit: "ঝুঁকি নির্ণয় করুন",
    formIncomplete: "ঝুঁকি নির্ণয়ের জন্য প্রতিটি প্রশ্নের উত্তর দিন।",
    riskHeading: "স্ক্রিনিং ফলাফল",
    riskPositive: "কিডনি পরীক্ষার জন্য রেফার করুন",
    riskNegative: "রেফারের প্রয়োজন নেই",
    probabilityLabel: "আনুমানিক সিকেডি ঝুঁকি",
    thresholdNote: "রেফারেল সীমা",
    contributionsHeading: "ফলাফলের কারণ",
    baseValueLabel: "ভিত্তিমান (উত্তরের আগে)",
    pushesUp: "ঝুঁকি বাড়ায়",
    pushesDown: "ঝুঁকি কমায়",
    whatIfHeading: "যদি বদলায়…",
    whatIfHint: "একটি উত্তর বদলে দেখুন ঝুঁকি কীভাবে বদলায়।",
    whatIfDelta: "ঝুঁকির পরিবর্তন",
    unreachable: "স্ক্রিনিং সার্ভিসে সংযোগ করা যাচ্ছে না।",
    retry: "আবার চেষ্টা করুন",
    fieldMissing: "এই উত্তরটি আবশ্যক।",
    fieldRejected: "সার্ভিস এই উত্তরটি গ্রহণ করেনি।",
    loadingSchema: "প্রশ্ন আসছে…",
    emptySchema: "সার্ভিস কোনো প্রশ্ন পাঠায়নি; স্ক্রিনিং শুরু করা যাচ্ছে না।",
  },
} as const;

export type StringKey = keyof (typeof STRINGS)["en"];

export function t(key: StringKey, lang: Lang = "en"): string {
  return STRINGS[lang][key];
}

export function availableLanguages(): Lang[] {
  return Object.keys(STRINGS) as Lang[];
}
