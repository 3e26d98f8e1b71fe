#pragma once

// Versioned prompt asset for LLM social-orientation labeling: the task
// framing, the eight tag definitions and four labeled example conversations.
// Changing any byte here is a new template version.

#include <string_view>

namespace socorient::tagging::assets {

inline constexpr std::string_view kPromptTemplateVersion = "social-orientation-v1";

inline constexpr std::string_view kSystemPrompt = "You are a helpful assistant.";

inline constexpr std::string_view kTaskIntro =
    R"prompt(Social orientation (from circumplex theory) is a social theory that characterizes interactions between speakers. The social orientation tagset includes: {Assured-Dominant, Gregarious-Extraverted, Warm-Agreeable, Unassuming-Ingenuous, Unassured-Submissive, Aloof-Introverted, Cold, Arrogant-Calculating}, which are defined below in more detail.)prompt";

inline constexpr std::string_view kTagDefinitions = R"prompt(Assured-Dominant - Demands to be the center of interest, demands attention, does most of the talking, speaks loudly, is firm, is self-confident, is forceful, is ambitious, is assertive, is persistent, is domineering, not self-conscious

Gregarious-Extraverted - Feels comfortable around people, starts conversations, talks to a lot of different people, loves large groups, is friendly, is enthusiastic, is warm, is extraverted, is good-natured, is cheerful / happy, is pleasant, is outgoing, is approachable, is not shy, is "lively"

Warm-Agreeable - is interested in people, reassures others, inquires about others' well-being, gets along well with others, is kind, is polite and courteous, is sympathetic, is respectful, is tender-hearted, is cooperative, is appreciative, is accommodating, is gentle, is charitable

Unassuming-Ingenuous - Tolerates a lot from others, takes things as they come, tells the truth, thinks of others first, does not brag or boast, seldom stretches the truth, does not scheme or plot, is modest, is trustworthy, is unassuming, is honest, not self-centered, is sincere, not demanding, is straightforward

Unassured-Submissive - Speaks softly, lets others finish what they are saying, dislikes being the center of attention, doubts themselves, not especially thorough, doesn't like to work too hard / will give up easily, is impractical, is timid, is inconsistent, is weak, is disorganized, is not authoritative, is a bit lazy, is not forceful

Aloof-Introverted - Is quiet, especially around strangers, is a very private person, doesn't talk a lot / has little to say, doesn't smile much, doesn't reveal much about themselves, is not demonstrative (verbally or non-verbally), is distant, is shy, is impersonal, is introverted, is disinterested in others, is bashful, is not very social, is focused inward

Cold - Believes people should fend for themselves, doesn't fall for sob-stories, is not interested in other people's problems, not warm toward others, is cruel, is ruthless, is cold-hearted, is hard-hearted, is unsympathetic, is uncharitable

Arrogant-Calculating - Flaunts what they have, boasts and brags, will plot and scheme to get ahead, willing to exploit others for own benefit, is big-headed, is tricky, is boisterous, is conniving / calculating, is conceited, is crafty / cunning, is cocky, is manipulative of others)prompt";

inline constexpr std::string_view kTableInstructions =
    R"prompt(In the following conversations drawn from Wikipedia discussion forums, each row corresponds to an Utterance ID, a Speaker ID, and the Text spoken. For each utterance, assign a social orientation tag. Identify the utterance by its Utterance ID and Speaker ID. Here are a few examples.)prompt";

// One conversation per line; every utterance carries its reference label.
inline constexpr std::string_view kFewshotJsonl = R"fewshot({"conversation_id": "fewshot-1", "utterances": [{"utterance_id": "1", "speaker_id": "Tryptofish", "text": "== Good work! == '''The Admin's Barnstar''' For the apparently thankless task of drafting a suggested closing summary at the RfC/U.", "label": "Warm-Agreeable"}, {"utterance_id": "2", "speaker_id": "The Wordsmith", "text": "Thank you for your kindness. I do make an effort to be even-handed, no matter what people wiki_link about me.", "label": "Unassuming-Ingenuous"}, {"utterance_id": "3", "speaker_id": "Lar", "text": "I was just popping by to offer some words of encouragement. Glad to see Tryp beat me to it. ++: /", "label": "Warm-Agreeable"}]}
{"conversation_id": "fewshot-2", "utterances": [{"utterance_id": "1", "speaker_id": "Gritzko", "text": "==  is under a criminal investigation]] == I am rather pleased to relay that here: Sergey Rublyov aka Ssr who was rather active in curating this article is currently under an actual criminal investigation as his PR services to Mr. Misharin were illegally paid. Namely, 66.ru and politsovet.ru report that Mr Rublyov was provided with a mock employment at a regional energy company as an \"engineer\" (being a journalist by education). The regional prosecutor's office investigates the incident. [EXTERNA_LINK: http://politsovet.ru/40903-delo-o-mertvyh-dushah-rabota-formanchuka-mozhet-zakonchitsya-ugolovnym-delom.html] [EXTERNA_LINK: http://66.ru/news/society/131688/] Regional MP Alshevskikh confirms on Twitter: [EXTERNA_LINK: https://twitter.com/Alshevskix/status/299147903560204289] Well, it was really stupid from Mr Rublyov to do drunk posts on LiveJournal insulting his past employers.", "label": "Cold"}, {"utterance_id": "2", "speaker_id": "Ssr", "text": "Any relation of this info to work on current Wikipedia article? You personally are not recommended to appear here by independent mediators, don't you remember? (because of your and your friends' persistent attempts to violently use Wikipedia for political attacks\u2014while I was acting correctly according to rules, see also Russian article/talk\u2014and your edits to both were totally wiped out) No \"past employers\" were insulted BTW. ", "label": "Unassuming-Ingenuous"}, {"utterance_id": "3", "speaker_id": "2A02:6B8:0:107:D83D:EE04:EA8D:1553", "text": "How unfortunate, I am not illegally employed full-time to whitewash reputations of corrupted politicians. Hence, I do not have that much time to defend my edits. But maybe, I will make another attempt.", "label": "Arrogant-Calculating"}, {"utterance_id": "4", "speaker_id": "Ssr", "text": "I doubt you are able (if this long number is you) because _several_ independent mediators in ru end en after many long-time investigations decided that you and your friends try to violate wikipedia for political purposes so no luck for you here (read posts above including links to mediations\u2014don't forget!). Such posts as this particular your post are not welcome here because it's unrelated to work on the article and may be deleted as off-topic (in ru this is widely practiced).", "label": "Warm-Agreeable"}, {"utterance_id": "5", "speaker_id": "Gritzko", "text": "I am pretty sure you are not talking to me now because you certainly know that I certainly know that you are lying. I'll make my edits this Saturday, be prepared.", "label": "Arrogant-Calculating"}, {"utterance_id": "6", "speaker_id": "Ssr", "text": "No need for me to be prepared, I am, as you, a COI party, am not going to edit, and mediators will do their job well as they did before (many thanks again to them for their great work).", "label": "Unassuming-Ingenuous"}, {"utterance_id": "7", "speaker_id": "Ssr", "text": "*Also, there's an arbitraiton warning for other Gritzko's violations: wiki_link, so he must be under strict control, as his \"warnings\" most probably indicate further violations.", "label": "Unassuming-Ingenuous"}, {"utterance_id": "8", "speaker_id": "Gritzko", "text": "You have a COI cause you were paid to doctor this article. I have no COI. You are a liar. Clear enough?", "label": "Cold"}]}
{"conversation_id": "fewshot-3", "utterances": [{"utterance_id": "1", "speaker_id": "DarkHero", "text": "check the sig. Leaked Info?", "label": "Aloof-Introverted"}, {"utterance_id": "2", "speaker_id": "Sukecchi", "text": "I highly doubt those are real. - I doubt it too...but I still wonder", "label": "Unassured-Submissive"}, {"utterance_id": "3", "speaker_id": "BrydoF1989", "text": "Fat chance. These appear to be the creatures from Telefang O_o", "label": "Arrogant-Calculating"}, {"utterance_id": "4", "speaker_id": "Joizashmo", "text": "I think they look more like Digimon than Pok\u00e9mon.", "label": "Unassuming-Ingenuous"}, {"utterance_id": "5", "speaker_id": "Rat235478683", "text": "The middle one looks like the evolved form of Heracross.Rat235478683", "label": "Unassuming-Ingenuous"}, {"utterance_id": "6", "speaker_id": "68.65.113.160", "text": "Hi, I'm Kojiro who had that sig. They were indeed Telefang, I just wanted too see how many people believed it. XD I didn't mean to cause any trouble.", "label": "Unassured-Submissive"}, {"utterance_id": "7", "speaker_id": "Rat235478683", "text": "You stink!Rat235478683", "label": "Cold"}]}
{"conversation_id": "fewshot-4", "utterances": [{"utterance_id": "1", "speaker_id": "Jack1234567891011121314151617", "text": "Multiculturalism So i think it's false to say that the alt right opposes multiculturalism. Because from what i've understood they basically want an white ethno state where all europeans would be welcome. How would they have an white ethno state without many cultures? The alt right might say they are against it but they don't seem to  understand that they basically advocate for a multicultural state", "label": "Gregarious-Extraverted"}, {"utterance_id": "2", "speaker_id": "Lukacris", "text": "While race and culture aren't exactly the same thing, I think it's fair to conceptualize white nationalism as antithetical to multiculturalism.", "label": "Warm-Agreeable"}, {"utterance_id": "3", "speaker_id": "Jack1234567891011121314151617", "text": "@Lukacris I know that race and culture aren't the same thing obviously, but what i meant is that ultimate goal for the alt right is the ethno state where ALL whites would be welcome. If all whites with many different cultures  are welcome then they're for multiculturalism.  \u2014\u00a0Preceding unsigned comment added by", "label": "Arrogant-Calculating"}, {"utterance_id": "4", "speaker_id": "Beyond My Ken", "text": "This is general discussion of the topic  i.e. WP:NOTAFORUM  and not about how to improve the article.  If Jack123... has a reliable source that says that the alt-right is not opposed to mutliculturalism. he should provide it.", "label": "Unassuming-Ingenuous"}, {"utterance_id": "5", "speaker_id": "Jack1234567891011121314151617", "text": "@Beyond My Ken Don't you think that the alt right advocating for an ethno state is evidence enough?", "label": "Unassured-Submissive"}, {"utterance_id": "6", "speaker_id": "Beyond My Ken", "text": "Nope, nowhere near enough. In fact, your stretching of their position strains credulity, since it's completely bullshit.", "label": "Cold"}]}
)fewshot";

}  // namespace socorient::tagging::assets
